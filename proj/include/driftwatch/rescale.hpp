#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <vector>

#include "driftwatch/serialize.hpp"

namespace driftwatch {

struct RescaleConfig {
  std::size_t window_size = 15;
  double k = 1.0;
  double sigma_floor = 1e-9;

  void validate() const;
  bool operator==(const RescaleConfig&) const = default;
};

/// The most recent `capacity` observations, oldest first.
class RollingWindow {
 public:
  explicit RollingWindow(std::size_t capacity);

  void push(double value);
  std::size_t size() const { return values_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool full() const { return values_.size() == capacity_; }
  std::vector<double> contents() const { return {values_.begin(), values_.end()}; }

  void save(BinaryWriter& out) const;
  static RollingWindow load(BinaryReader& in);
  bool operator==(const RollingWindow&) const = default;

 private:
  std::size_t capacity_;
  std::deque<double> values_;
};

/// Sample standard deviation (n - 1 denominator) of the window, floored at
/// sigma_floor. Empty while fewer than two values are buffered, which callers
/// treat as warm-up.
std::optional<double> rolling_std(const RollingWindow& window, double sigma_floor);

/// min(1, |predicted - observed| / (k * sigma_roll)).
double rescale_score(double predicted, double observed, double sigma_roll,
                     const RescaleConfig& cfg);

}  // namespace driftwatch
