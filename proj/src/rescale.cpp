#include "driftwatch/rescale.hpp"

#include <algorithm>
#include <cmath>

#include "driftwatch/errors.hpp"

namespace driftwatch {

void RescaleConfig::validate() const {
  if (window_size < 2) throw ConfigError("rescale window_size must be at least 2");
  if (!(k > 0.0) || !std::isfinite(k)) throw ConfigError("rescale k must be positive");
  if (!(sigma_floor > 0.0)) throw ConfigError("rescale sigma_floor must be positive");
}

RollingWindow::RollingWindow(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ConfigError("rolling window capacity must be positive");
}

void RollingWindow::push(double value) {
  if (values_.size() == capacity_) values_.pop_front();
  values_.push_back(value);
}

void RollingWindow::save(BinaryWriter& out) const {
  out.put<std::uint64_t>(capacity_);
  out.put_vector(contents());
}

RollingWindow RollingWindow::load(BinaryReader& in) {
  RollingWindow w(in.get<std::uint64_t>());
  const auto values = in.get_vector<double>();
  if (values.size() > w.capacity_) throw InputError("corrupt rolling window snapshot");
  for (double v : values) w.push(v);
  return w;
}

std::optional<double> rolling_std(const RollingWindow& window, double sigma_floor) {
  if (window.size() < 2) return std::nullopt;
  const auto values = window.contents();
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return std::max(sd, sigma_floor);
}

double rescale_score(double predicted, double observed, double sigma_roll,
                     const RescaleConfig& cfg) {
  if (!std::isfinite(predicted) || !std::isfinite(observed) || !std::isfinite(sigma_roll)) {
    throw InputError("rescale_score requires finite inputs");
  }
  if (sigma_roll < cfg.sigma_floor) throw InputError("sigma_roll is below sigma_floor");
  return std::min(1.0, std::abs(predicted - observed) / (cfg.k * sigma_roll));
}

}  // namespace driftwatch
