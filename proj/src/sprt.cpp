#include "driftwatch/sprt.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "driftwatch/errors.hpp"

namespace driftwatch {

namespace {

bool in_open_unit(double x) { return x > 0.0 && x < 1.0; }

}  // namespace

void SprtConfig::validate() const {
  if (!in_open_unit(p_null) || !in_open_unit(p_alt)) {
    throw ConfigError("p_null and p_alt must lie in (0, 1)");
  }
  if (!(p_null < p_alt)) throw ConfigError("p_null must be strictly below p_alt");
  if (!in_open_unit(alpha) || !in_open_unit(beta)) {
    throw ConfigError("alpha and beta must lie in (0, 1)");
  }
  if (!(alpha + beta < 1.0)) throw ConfigError("alpha + beta must be below 1");
  // 1 is allowed: it switches binarization off entirely.
  if (!(bin_threshold > 0.0 && bin_threshold <= 1.0)) {
    throw ConfigError("bin_threshold must lie in (0, 1]");
  }
}

SprtConfig sprt_high_alternative_preset() {
  SprtConfig cfg;
  cfg.p_alt = 0.65;
  return cfg;
}

const char* to_string(Decision d) {
  switch (d) {
    case Decision::kContinue: return "continue";
    case Decision::kDriftDetected: return "drift";
    case Decision::kNoDrift: return "no_drift";
  }
  return "unknown";
}

const char* to_string(DriftEvent::Kind k) {
  return k == DriftEvent::Kind::kDriftOnset ? "drift_onset" : "no_drift";
}

int binarize(double htm_t, double bin_threshold) {
  if (!(htm_t >= 0.0 && htm_t <= 1.0)) throw InputError("htm_t must lie in [0, 1]");
  return htm_t > bin_threshold ? 1 : 0;
}

SprtLimits sprt_limits(std::uint64_t t, const SprtConfig& cfg) {
  if (cfg.p_null == cfg.p_alt) throw ConfigError("p_null == p_alt makes the SPRT limits undefined");
  const double a = cfg.alpha;
  const double b = cfg.beta;
  const double denom =
      std::log(cfg.p_alt / cfg.p_null) - std::log((1.0 - cfg.p_alt) / (1.0 - cfg.p_null));
  const double slope = std::log((1.0 - cfg.p_null) / (1.0 - cfg.p_alt));
  const double td = static_cast<double>(t);
  return {(std::log(b / (1.0 - a)) + td * slope) / denom,
          (std::log((1.0 - b) / a) + td * slope) / denom};
}

SprtStepResult sprt_step(SprtState& state, int c, const SprtConfig& cfg) {
  if (c != 0 && c != 1) throw InputError("SPRT input must be 0 or 1");
  state.t += 1;
  state.cm += static_cast<std::uint64_t>(c);
  const auto limits = sprt_limits(state.t, cfg);
  const double cm = static_cast<double>(state.cm);
  SprtStepResult result{Decision::kContinue, state.t, state.cm, limits};
  if (cm > limits.upper) {
    result.decision = Decision::kDriftDetected;
  } else if (cm < limits.lower) {
    result.decision = Decision::kNoDrift;
  }
  state.last_decision = result.decision;
  if (result.decision != Decision::kContinue) {
    state.t = 0;
    state.cm = 0;
  }
  return result;
}

Decision multivariate_combine(std::span<const Decision> decisions) {
  if (decisions.empty()) throw InputError("cannot combine an empty decision list");
  if (std::any_of(decisions.begin(), decisions.end(),
                  [](Decision d) { return d == Decision::kDriftDetected; })) {
    return Decision::kDriftDetected;
  }
  if (std::all_of(decisions.begin(), decisions.end(),
                  [](Decision d) { return d == Decision::kNoDrift; })) {
    return Decision::kNoDrift;
  }
  return Decision::kContinue;
}

std::string to_json_line(const DriftEvent& e) {
  nlohmann::ordered_json j;
  j["global_time"] = e.global_time;
  if (e.dimension) j["dimension"] = *e.dimension;
  j["kind"] = to_string(e.kind);
  j["cm_at_decision"] = e.cm_at_decision;
  j["upper_limit"] = e.upper_limit;
  j["lower_limit"] = e.lower_limit;
  return j.dump();
}

DriftEvent drift_event_from_json(const std::string& line) {
  try {
    const auto j = nlohmann::json::parse(line);
    DriftEvent e;
    e.global_time = j.at("global_time").get<std::uint64_t>();
    if (j.contains("dimension")) e.dimension = j.at("dimension").get<std::size_t>();
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "drift_onset") {
      e.kind = DriftEvent::Kind::kDriftOnset;
    } else if (kind == "no_drift") {
      e.kind = DriftEvent::Kind::kNoDriftDecision;
    } else {
      throw InputError("unknown event kind '" + kind + "'");
    }
    e.cm_at_decision = j.at("cm_at_decision").get<std::uint64_t>();
    e.upper_limit = j.at("upper_limit").get<double>();
    e.lower_limit = j.at("lower_limit").get<double>();
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw InputError(std::string("malformed event record: ") + ex.what());
  }
}

void save(BinaryWriter& out, const SprtConfig& cfg) {
  out.put(cfg.p_null);
  out.put(cfg.p_alt);
  out.put(cfg.alpha);
  out.put(cfg.beta);
  out.put(cfg.bin_threshold);
}

SprtConfig load_sprt_config(BinaryReader& in) {
  SprtConfig cfg;
  cfg.p_null = in.get<double>();
  cfg.p_alt = in.get<double>();
  cfg.alpha = in.get<double>();
  cfg.beta = in.get<double>();
  cfg.bin_threshold = in.get<double>();
  cfg.validate();
  return cfg;
}

void save(BinaryWriter& out, const SprtState& state) {
  out.put(state.t);
  out.put(state.cm);
  out.put(static_cast<std::uint8_t>(state.last_decision));
}

SprtState load_sprt_state(BinaryReader& in) {
  SprtState s;
  s.t = in.get<std::uint64_t>();
  s.cm = in.get<std::uint64_t>();
  const auto d = in.get<std::uint8_t>();
  if (d > 2 || s.cm > s.t) throw InputError("corrupt SPRT snapshot");
  s.last_decision = static_cast<Decision>(d);
  return s;
}

}  // namespace driftwatch
