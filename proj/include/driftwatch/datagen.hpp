#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace driftwatch {

/// A seeded synthetic series with its exact generating mean.
struct Scenario {
  std::string kind;
  // One row per time step; univariate scenarios have one value per row.
  std::vector<std::vector<double>> values;
  std::vector<double> mean_trace;
  std::optional<std::size_t> change_point;
  std::optional<std::vector<int>> labels;
  std::uint64_t seed = 0;
  // Generator parameters, for the sidecar metadata.
  std::map<std::string, double> params;

  std::size_t length() const { return values.size(); }
  std::size_t dimensions() const { return values.empty() ? 0 : values.front().size(); }
  /// Column `dim` as a flat series.
  std::vector<double> series(std::size_t dim = 0) const;

  bool operator==(const Scenario&) const = default;
};

/// amplitude * sin(2 pi t / period) + N(0, noise_sd^2).
Scenario gen_periodic(std::size_t n = 500, double period = 250.0, double amplitude = 0.5,
                      double noise_sd = 0.2, std::uint64_t seed = 0);

/// Cubic mean on s = t / (n - 1) with N(0, 1) coefficients, redrawn until its
/// derivative keeps one strict sign over the grid (at most 1000 draws).
Scenario gen_monotonic_cubic(std::size_t n = 500, double noise_sd = 0.2, std::uint64_t seed = 0);

/// Mean 0 before change_point and `shift` from it on.
Scenario gen_abrupt(std::size_t n = 500, double shift = 2.0, std::size_t change_point = 250,
                    double noise_sd = 1.0, std::uint64_t seed = 0);

Scenario gen_no_drift(std::size_t n = 500, double noise_sd = 1.0, std::uint64_t seed = 0);

/// d unit-variance AR(1) channels driven by a shared factor. With probability
/// anomaly_rate a row is displaced by `displacement` in every channel, with
/// signs alternating across channels. Labels mark displaced rows.
Scenario gen_labeled_multivariate(std::size_t n = 2000, std::size_t d = 6,
                                  double anomaly_rate = 0.05, std::uint64_t seed = 0,
                                  double displacement = 3.0);

/// Builds a scenario by name: periodic, monotonic, abrupt, no-drift, labeled.
/// Unrecognized parameter names throw ConfigError.
Scenario make_scenario(const std::string& kind, const std::map<std::string, double>& params,
                       std::uint64_t seed);

std::string scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const std::string& text);

}  // namespace driftwatch
