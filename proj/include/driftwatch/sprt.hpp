#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "driftwatch/serialize.hpp"

namespace driftwatch {

/// Hyperparameters of the Bernoulli SPRT on the binarized anomaly sequence.
struct SprtConfig {
  double p_null = 0.45;
  double p_alt = 0.5;
  double alpha = 0.05;  // type-1 error bound
  double beta = 0.005;  // type-2 error bound
  double bin_threshold = 0.65;

  void validate() const;
  bool operator==(const SprtConfig&) const = default;
};

/// p_alt = 0.65 variant of the default hypotheses.
SprtConfig sprt_high_alternative_preset();

enum class Decision : std::uint8_t { kContinue = 0, kDriftDetected = 1, kNoDrift = 2 };

const char* to_string(Decision d);

struct SprtState {
  std::uint64_t t = 0;   // steps since the last restart
  std::uint64_t cm = 0;  // ones observed since the last restart
  Decision last_decision = Decision::kContinue;

  bool operator==(const SprtState&) const = default;
};

struct SprtLimits {
  double lower;
  double upper;
};

/// 1 iff htm_t > bin_threshold. htm_t must lie in [0, 1].
int binarize(double htm_t, double bin_threshold);

/// Wald acceptance/rejection boundaries for the cumulative count after t steps.
SprtLimits sprt_limits(std::uint64_t t, const SprtConfig& cfg);

struct SprtStepResult {
  Decision decision;
  // Count and boundaries the decision was made against, before any restart.
  std::uint64_t t;
  std::uint64_t cm;
  SprtLimits limits;
};

/// Advances the test by one observation. A terminal decision restarts the
/// test: the returned state has t = cm = 0 and records the decision.
SprtStepResult sprt_step(SprtState& state, int c, const SprtConfig& cfg);

/// Drift if any dimension reports drift, no drift if all do, else continue.
Decision multivariate_combine(std::span<const Decision> decisions);

struct DriftEvent {
  enum class Kind : std::uint8_t { kDriftOnset, kNoDriftDecision };

  std::uint64_t global_time = 0;
  std::optional<std::size_t> dimension;  // absent for combined events
  Kind kind = Kind::kDriftOnset;
  std::uint64_t cm_at_decision = 0;
  double upper_limit = 0.0;
  double lower_limit = 0.0;

  bool operator==(const DriftEvent&) const = default;
};

const char* to_string(DriftEvent::Kind k);

/// One JSON object, no trailing newline.
std::string to_json_line(const DriftEvent& e);
DriftEvent drift_event_from_json(const std::string& line);

void save(BinaryWriter& out, const SprtConfig& cfg);
SprtConfig load_sprt_config(BinaryReader& in);
void save(BinaryWriter& out, const SprtState& state);
SprtState load_sprt_state(BinaryReader& in);

}  // namespace driftwatch
