#include "driftwatch/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "driftwatch/errors.hpp"
#include "driftwatch/rng.hpp"

namespace driftwatch {

namespace {

constexpr double kPsiEpsilon = 1e-6;

void require_non_empty(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw InputError("two-sample statistic needs non-empty samples");
}

std::vector<double> sorted_copy(std::span<const double> x) {
  std::vector<double> v(x.begin(), x.end());
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

const char* to_string(BaselineMethod m) {
  switch (m) {
    case BaselineMethod::kKs: return "ks";
    case BaselineMethod::kWasserstein: return "wasserstein";
    case BaselineMethod::kPsi: return "psi";
  }
  return "unknown";
}

BaselineMethod parse_baseline_method(const std::string& name) {
  if (name == "ks" || name == "KS") return BaselineMethod::kKs;
  if (name == "wasserstein" || name == "Wasserstein") return BaselineMethod::kWasserstein;
  if (name == "psi" || name == "PSI") return BaselineMethod::kPsi;
  throw ConfigError("unknown baseline method '" + name + "'");
}

void BaselineConfig::validate() const {
  if (window < 2) throw ConfigError("baseline window must be at least 2");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("baseline alpha must lie in (0, 1)");
  if (wasserstein_threshold && !(*wasserstein_threshold > 0.0)) {
    throw ConfigError("wasserstein_threshold must be positive");
  }
  if (!(psi_threshold > 0.0)) throw ConfigError("psi_threshold must be positive");
  if (psi_bins == 0) throw ConfigError("psi_bins must be positive");
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    // Jacobi theta form of the same CDF; the alternating series below
    // converges too slowly for small lambda.
    const double x = std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda);
    double cdf = 0.0;
    for (int k = 1; k <= 100; k += 2) cdf += std::exp(-static_cast<double>(k * k) * x);
    cdf *= std::sqrt(2.0 * std::numbers::pi) / lambda;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1) ? term : -term;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

TwoSampleResult ks_two_sample(std::span<const double> a, std::span<const double> b,
                              double alpha) {
  require_non_empty(a, b);
  const auto sa = sorted_copy(a);
  const auto sb = sorted_copy(b);
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == x) ++i;
    while (j < sb.size() && sb[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  TwoSampleResult r;
  r.statistic = d;
  const double ne = na * nb / (na + nb);
  r.p_value = kolmogorov_survival(std::sqrt(ne) * d);
  r.reject = *r.p_value < alpha;
  return r;
}

double wasserstein_1d(std::span<const double> a, std::span<const double> b) {
  require_non_empty(a, b);
  const auto sa = sorted_copy(a);
  const auto sb = sorted_copy(b);
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double total = 0.0;
  double x = std::min(sa.front(), sb.front());
  while (i < sa.size() || j < sb.size()) {
    // Advance past every point equal to x, then integrate the CDF gap up to
    // the next point.
    while (i < sa.size() && sa[i] == x) ++i;
    while (j < sb.size() && sb[j] == x) ++j;
    const double next = std::min(i < sa.size() ? sa[i] : INFINITY, j < sb.size() ? sb[j] : INFINITY);
    if (!std::isfinite(next)) break;
    total += std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb) * (next - x);
    x = next;
  }
  return total;
}

double calibrate_wasserstein_threshold(std::size_t iterations, std::size_t sample_size,
                                       double quantile, std::uint64_t seed) {
  if (iterations < 100) throw ConfigError("calibration needs at least 100 iterations");
  if (sample_size == 0) throw ConfigError("calibration sample_size must be positive");
  if (!(quantile >= 0.0 && quantile <= 1.0)) throw ConfigError("quantile must lie in [0, 1]");
  Rng rng(seed);
  std::vector<double> distances(iterations);
  std::vector<double> a(sample_size), b(sample_size);
  for (auto& dist : distances) {
    for (auto& x : a) x = rng.normal();
    for (auto& x : b) x = rng.normal();
    dist = wasserstein_1d(a, b);
  }
  std::sort(distances.begin(), distances.end());
  const double pos = quantile * static_cast<double>(iterations - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, iterations - 1);
  return distances[lo] + (pos - static_cast<double>(lo)) * (distances[hi] - distances[lo]);
}

double psi_score(std::span<const double> reference, std::span<const double> target,
                 std::size_t bins) {
  if (bins == 0) throw InputError("psi needs at least one bin");
  if (reference.size() < bins) throw InputError("psi needs at least as many reference points as bins");
  if (target.empty()) throw InputError("psi needs a non-empty target");
  const auto ref = sorted_copy(reference);
  const std::size_t n = ref.size();
  // Interior edges at reference quantiles; a value lands in the bin equal to
  // the number of edges at or below it.
  std::vector<double> edges;
  for (std::size_t i = 1; i < bins; ++i) edges.push_back(ref[i * n / bins]);
  auto bin_of = [&](double v) {
    return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
  };
  std::vector<double> p(bins, 0.0), q(bins, 0.0);
  for (double v : ref) p[bin_of(v)] += 1.0;
  for (double v : target) q[bin_of(v)] += 1.0;
  double psi = 0.0;
  for (std::size_t i = 0; i < bins; ++i) {
    const double pi = std::max(p[i] / static_cast<double>(n), kPsiEpsilon);
    const double qi = std::max(q[i] / static_cast<double>(target.size()), kPsiEpsilon);
    psi += (qi - pi) * std::log(qi / pi);
  }
  return psi;
}

std::vector<BaselineAlert> rolling_drift_detect(std::span<const double> series,
                                                const BaselineConfig& cfg) {
  cfg.validate();
  const std::size_t w = cfg.window;
  if (series.size() < 2 * w) throw InputError("series is shorter than two windows");
  double threshold = 0.0;
  switch (cfg.method) {
    case BaselineMethod::kKs: threshold = cfg.alpha; break;
    case BaselineMethod::kWasserstein:
      threshold = cfg.wasserstein_threshold.value_or(calibrate_wasserstein_threshold());
      break;
    case BaselineMethod::kPsi: threshold = cfg.psi_threshold; break;
  }
  std::vector<BaselineAlert> alerts;
  for (std::size_t s = w; s + w <= series.size(); ++s) {
    const auto reference = series.subspan(s - w, w);
    const auto target = series.subspan(s, w);
    double stat = 0.0;
    bool reject = false;
    switch (cfg.method) {
      case BaselineMethod::kKs: {
        const auto r = ks_two_sample(reference, target, cfg.alpha);
        stat = r.statistic;
        reject = r.reject;
        break;
      }
      case BaselineMethod::kWasserstein:
        stat = wasserstein_1d(reference, target);
        reject = stat > threshold;
        break;
      case BaselineMethod::kPsi:
        stat = psi_score(reference, target, cfg.psi_bins);
        reject = stat > threshold;
        break;
    }
    if (reject) alerts.push_back({s, stat, threshold});
  }
  return alerts;
}

std::string to_json_line(const BaselineAlert& alert, BaselineMethod method) {
  nlohmann::ordered_json j;
  j["t"] = alert.t;
  j["method"] = to_string(method);
  j["statistic"] = alert.statistic;
  j["threshold"] = alert.threshold;
  return j.dump();
}

}  // namespace driftwatch
