#include "driftwatch/datagen.hpp"

#include <cmath>
#include <numbers>

#include <json.hpp>

#include "driftwatch/errors.hpp"
#include "driftwatch/rng.hpp"

namespace driftwatch {

namespace {

void require_positive_length(std::size_t n) {
  if (n == 0) throw InputError("scenario length must be at least 1");
}

void require_noise(double sd) {
  if (!(sd >= 0.0) || !std::isfinite(sd)) throw InputError("noise_sd must be non-negative");
}

Scenario univariate(std::string kind, const std::vector<double>& mean, double noise_sd, Rng& rng,
                    std::uint64_t seed) {
  Scenario s;
  s.kind = std::move(kind);
  s.seed = seed;
  s.mean_trace = mean;
  s.values.reserve(mean.size());
  for (double m : mean) s.values.push_back({m + noise_sd * rng.normal()});
  return s;
}

}  // namespace

std::vector<double> Scenario::series(std::size_t dim) const {
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& row : values) out.push_back(row.at(dim));
  return out;
}

Scenario gen_periodic(std::size_t n, double period, double amplitude, double noise_sd,
                      std::uint64_t seed) {
  require_positive_length(n);
  require_noise(noise_sd);
  if (!(period > 0.0)) throw InputError("period must be positive");
  std::vector<double> mean(n);
  for (std::size_t t = 0; t < n; ++t) {
    mean[t] = amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period);
  }
  Rng rng(seed);
  auto s = univariate("periodic", mean, noise_sd, rng, seed);
  s.params = {{"n", double(n)}, {"period", period}, {"amplitude", amplitude}, {"noise_sd", noise_sd}};
  return s;
}

Scenario gen_monotonic_cubic(std::size_t n, double noise_sd, std::uint64_t seed) {
  require_positive_length(n);
  require_noise(noise_sd);
  Rng rng(seed);
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  std::vector<double> coef(4);
  bool accepted = false;
  for (int attempt = 0; attempt < 1000 && !accepted; ++attempt) {
    for (auto& c : coef) c = rng.normal();
    int sign = 0;
    accepted = true;
    for (std::size_t t = 0; t < n && accepted; ++t) {
      const double s = static_cast<double>(t) / denom;
      const double slope = coef[1] + 2.0 * coef[2] * s + 3.0 * coef[3] * s * s;
      const int sg = slope > 0.0 ? 1 : (slope < 0.0 ? -1 : 0);
      if (sg == 0 || (sign != 0 && sg != sign)) accepted = false;
      sign = sg;
    }
  }
  if (!accepted) throw InputError("no monotone cubic found within 1000 draws");
  std::vector<double> mean(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double s = static_cast<double>(t) / denom;
    mean[t] = coef[0] + s * (coef[1] + s * (coef[2] + s * coef[3]));
  }
  auto out = univariate("monotonic", mean, noise_sd, rng, seed);
  out.params = {{"n", double(n)}, {"noise_sd", noise_sd}, {"c0", coef[0]},
                {"c1", coef[1]},  {"c2", coef[2]},        {"c3", coef[3]}};
  return out;
}

Scenario gen_abrupt(std::size_t n, double shift, std::size_t change_point, double noise_sd,
                    std::uint64_t seed) {
  require_positive_length(n);
  require_noise(noise_sd);
  if (change_point == 0 || change_point >= n) {
    throw InputError("change_point must satisfy 0 < change_point < n");
  }
  std::vector<double> mean(n, 0.0);
  for (std::size_t t = change_point; t < n; ++t) mean[t] = shift;
  Rng rng(seed);
  auto s = univariate("abrupt", mean, noise_sd, rng, seed);
  s.change_point = change_point;
  s.params = {{"n", double(n)}, {"shift", shift}, {"change_point", double(change_point)},
              {"noise_sd", noise_sd}};
  return s;
}

Scenario gen_no_drift(std::size_t n, double noise_sd, std::uint64_t seed) {
  require_positive_length(n);
  require_noise(noise_sd);
  Rng rng(seed);
  auto s = univariate("no-drift", std::vector<double>(n, 0.0), noise_sd, rng, seed);
  s.params = {{"n", double(n)}, {"noise_sd", noise_sd}};
  return s;
}

Scenario gen_labeled_multivariate(std::size_t n, std::size_t d, double anomaly_rate,
                                  std::uint64_t seed, double displacement) {
  require_positive_length(n);
  if (d < 2) throw InputError("labeled multivariate scenario needs d >= 2");
  if (!(anomaly_rate >= 0.0 && anomaly_rate <= 1.0)) {
    throw InputError("anomaly_rate must lie in [0, 1]");
  }
  if (!std::isfinite(displacement)) throw InputError("displacement must be finite");
  constexpr double kPersistence = 0.5;
  constexpr double kLoading = 0.8;
  const double innovation = std::sqrt(1.0 - kPersistence * kPersistence);
  const double idiosyncratic = std::sqrt(1.0 - kLoading * kLoading);

  Rng rng(seed);
  Scenario s;
  s.kind = "labeled";
  s.seed = seed;
  s.mean_trace.assign(n, 0.0);
  s.labels = std::vector<int>(n, 0);
  s.values.assign(n, std::vector<double>(d, 0.0));
  double factor = rng.normal();
  std::vector<double> own(d);
  for (auto& x : own) x = rng.normal();
  for (std::size_t t = 0; t < n; ++t) {
    factor = kPersistence * factor + innovation * rng.normal();
    for (std::size_t i = 0; i < d; ++i) {
      own[i] = kPersistence * own[i] + innovation * rng.normal();
      s.values[t][i] = kLoading * factor + idiosyncratic * own[i];
    }
    if (rng.uniform() < anomaly_rate) {
      (*s.labels)[t] = 1;
      for (std::size_t i = 0; i < d; ++i) {
        s.values[t][i] += (i % 2 == 0 ? displacement : -displacement);
      }
    }
  }
  s.params = {{"n", double(n)},
              {"d", double(d)},
              {"anomaly_rate", anomaly_rate},
              {"displacement", displacement}};
  return s;
}

Scenario make_scenario(const std::string& kind, const std::map<std::string, double>& params,
                       std::uint64_t seed) {
  auto take = [&](const std::map<std::string, double>& defaults) {
    for (const auto& [key, _] : params) {
      if (!defaults.count(key)) {
        throw ConfigError("scenario '" + kind + "' has no parameter '" + key + "'");
      }
    }
    auto merged = defaults;
    for (const auto& [key, value] : params) merged[key] = value;
    return merged;
  };
  auto count = [](double x, const char* name) {
    if (!(x >= 0.0) || x != std::floor(x)) {
      throw ConfigError(std::string("scenario parameter '") + name + "' must be a whole number");
    }
    return static_cast<std::size_t>(x);
  };
  if (kind == "periodic") {
    auto p = take({{"n", 500}, {"period", 250}, {"amplitude", 0.5}, {"noise_sd", 0.2}});
    return gen_periodic(count(p["n"], "n"), p["period"], p["amplitude"], p["noise_sd"], seed);
  }
  if (kind == "monotonic") {
    auto p = take({{"n", 500}, {"noise_sd", 0.2}});
    return gen_monotonic_cubic(count(p["n"], "n"), p["noise_sd"], seed);
  }
  if (kind == "abrupt") {
    auto p = take({{"n", 500}, {"shift", 2.0}, {"change_point", 250}, {"noise_sd", 1.0}});
    return gen_abrupt(count(p["n"], "n"), p["shift"], count(p["change_point"], "change_point"),
                      p["noise_sd"], seed);
  }
  if (kind == "no-drift") {
    auto p = take({{"n", 500}, {"noise_sd", 1.0}});
    return gen_no_drift(count(p["n"], "n"), p["noise_sd"], seed);
  }
  if (kind == "labeled") {
    auto p = take({{"n", 2000}, {"d", 6}, {"anomaly_rate", 0.05}, {"displacement", 3.0}});
    return gen_labeled_multivariate(count(p["n"], "n"), count(p["d"], "d"), p["anomaly_rate"],
                                    seed, p["displacement"]);
  }
  throw ConfigError("unknown scenario '" + kind + "'");
}

std::string scenario_to_json(const Scenario& s) {
  nlohmann::ordered_json j;
  j["kind"] = s.kind;
  j["seed"] = s.seed;
  j["params"] = s.params;
  j["change_point"] = s.change_point ? nlohmann::ordered_json(*s.change_point) : nullptr;
  j["mean_trace"] = s.mean_trace;
  j["values"] = s.values;
  j["labels"] = s.labels ? nlohmann::ordered_json(*s.labels) : nullptr;
  return j.dump(1);
}

Scenario scenario_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    Scenario s;
    s.kind = j.at("kind").get<std::string>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.params = j.at("params").get<std::map<std::string, double>>();
    if (!j.at("change_point").is_null()) s.change_point = j.at("change_point").get<std::size_t>();
    s.mean_trace = j.at("mean_trace").get<std::vector<double>>();
    s.values = j.at("values").get<std::vector<std::vector<double>>>();
    if (!j.at("labels").is_null()) s.labels = j.at("labels").get<std::vector<int>>();
    if (s.values.size() != s.mean_trace.size() ||
        (s.labels && s.labels->size() != s.values.size())) {
      throw InputError("scenario arrays have inconsistent lengths");
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed scenario file: ") + e.what());
  }
}

}  // namespace driftwatch
