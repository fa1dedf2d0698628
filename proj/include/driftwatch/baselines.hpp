#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace driftwatch {

enum class BaselineMethod { kKs, kWasserstein, kPsi };

const char* to_string(BaselineMethod m);
BaselineMethod parse_baseline_method(const std::string& name);

struct BaselineConfig {
  std::size_t window = 25;
  BaselineMethod method = BaselineMethod::kKs;
  double alpha = 0.05;
  // Unset means: calibrate by Monte Carlo with the default protocol.
  std::optional<double> wasserstein_threshold;
  double psi_threshold = 0.25;
  std::size_t psi_bins = 10;

  void validate() const;
};

struct TwoSampleResult {
  double statistic = 0.0;
  std::optional<double> p_value;
  bool reject = false;
};

/// Kolmogorov survival function Q(lambda) = P(K > lambda).
double kolmogorov_survival(double lambda);

/// Two-sided two-sample KS test with the asymptotic p-value at effective size
/// |a||b| / (|a| + |b|); rejects when p < alpha.
TwoSampleResult ks_two_sample(std::span<const double> a, std::span<const double> b,
                              double alpha = 0.05);

/// Integral of |F_a - F_b| over the real line for the two empirical CDFs.
double wasserstein_1d(std::span<const double> a, std::span<const double> b);

/// Empirical `quantile` (linear interpolation between order statistics) of
/// Wasserstein distances between `iterations` pairs of independent N(0, 1)
/// samples of `sample_size`.
double calibrate_wasserstein_threshold(std::size_t iterations = 500, std::size_t sample_size = 50,
                                       double quantile = 0.95, std::uint64_t seed = 0);

/// Population stability index over `bins` reference-quantile bins, with both
/// proportions floored at 1e-6.
double psi_score(std::span<const double> reference, std::span<const double> target,
                 std::size_t bins = 10);

struct BaselineAlert {
  std::uint64_t t;  // first index of the target window
  double statistic;
  double threshold;
};

/// Slides adjacent windows [s - w, s) and [s, s + w) over the series for
/// s = w .. n - w and records an alert whenever the method rejects.
std::vector<BaselineAlert> rolling_drift_detect(std::span<const double> series,
                                                const BaselineConfig& cfg);

std::string to_json_line(const BaselineAlert& alert, BaselineMethod method);

}  // namespace driftwatch
