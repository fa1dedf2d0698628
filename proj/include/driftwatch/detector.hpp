#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "driftwatch/htm.hpp"
#include "driftwatch/rescale.hpp"
#include "driftwatch/sprt.hpp"

namespace driftwatch {

struct DetectorConfig {
  std::size_t dimensions = 1;
  // One entry shared by every dimension, or exactly `dimensions` entries.
  std::vector<HtmConfig> htm{HtmConfig{}};
  std::vector<SprtConfig> sprt{SprtConfig{}};
  RescaleConfig rescale;
  // Emit a combined event per sample from the per-dimension decisions.
  bool combine = true;
  // Replace a dimension's HTM with a fresh one after it reports drift.
  bool reset_htm_on_drift = false;
  // Infer each dimension's encoder range from its first window_size samples
  // (observed span widened by the span on each side), then freeze it. The
  // encoder min/max in `htm` are ignored while this is set.
  bool auto_range = false;
  // Process dimensions on separate threads; results are merged in dimension
  // order and are identical to sequential processing.
  bool parallel = false;

  void validate() const;
  const HtmConfig& htm_for(std::size_t dim) const { return htm.size() == 1 ? htm[0] : htm[dim]; }
  const SprtConfig& sprt_for(std::size_t dim) const {
    return sprt.size() == 1 ? sprt[0] : sprt[dim];
  }
};

struct StreamSample {
  std::uint64_t index = 0;
  std::vector<double> values;
};

/// Per-dimension record of one scored (post warm-up) sample.
struct TraceRow {
  std::uint64_t t;
  std::size_t dim;
  double htm_raw;
  double htm_t;
  int c;
  std::uint64_t cm;
  double lower;
  double upper;
};

struct DriftWindow {
  std::uint64_t start = 0;
  std::optional<std::uint64_t> end;
  bool operator==(const DriftWindow&) const = default;
};

/// Streaming drift detector: per dimension, HTM prediction -> rescaled error
/// -> binarization -> restarting SPRT.
class Detector {
 public:
  explicit Detector(DetectorConfig cfg);

  /// Feeds one sample; returns the terminal decisions it caused, per-dimension
  /// events in dimension order followed by the combined event, if any.
  std::vector<DriftEvent> process(const StreamSample& sample,
                                  std::vector<TraceRow>* trace = nullptr);

  const DetectorConfig& config() const { return cfg_; }
  std::size_t dimensions() const { return dims_.size(); }
  const SprtState& sprt_state(std::size_t dim) const { return dims_.at(dim).sprt; }
  /// Null until the dimension's encoder range is known.
  const HtmModel* htm(std::size_t dim) const {
    return dims_.at(dim).htm ? &*dims_.at(dim).htm : nullptr;
  }
  std::uint64_t samples_seen() const { return samples_seen_; }

  std::string serialize() const;
  static Detector deserialize(const std::string& bytes);

  bool operator==(const Detector& o) const;

 private:
  struct DimensionState {
    std::optional<HtmModel> htm;
    RollingWindow window;
    SprtState sprt;
    std::vector<double> warmup;
    double next_prediction = 0.0;
    bool operator==(const DimensionState&) const = default;
  };

  struct DimensionResult {
    Decision decision = Decision::kContinue;
    std::optional<DriftEvent> event;
    std::optional<TraceRow> trace;
  };

  DimensionResult step_dimension(std::size_t dim, std::uint64_t index, double value);
  HtmConfig resolved_htm_config(std::size_t dim, const std::vector<double>& warmup) const;

  DetectorConfig cfg_;
  std::vector<DimensionState> dims_;
  std::uint64_t samples_seen_ = 0;
  std::optional<std::uint64_t> last_index_;
};

struct RunResult {
  std::vector<DriftEvent> events;
  std::vector<DriftWindow> windows;
};

/// Runs a fresh detector over `samples` and derives drift windows.
RunResult run_stream(const std::vector<StreamSample>& samples, const DetectorConfig& cfg,
                     std::vector<TraceRow>* trace = nullptr);

/// A window opens at each combined drift onset and closes at the next one;
/// the last window stays open. Without combined events, onsets of any
/// dimension are used.
std::vector<DriftWindow> drift_windows(const std::vector<DriftEvent>& events);

/// Wraps a univariate series as samples with indices 0..n-1.
std::vector<StreamSample> as_samples(const std::vector<double>& series);
/// Wraps rows of d values as samples with indices 0..n-1.
std::vector<StreamSample> as_samples(const std::vector<std::vector<double>>& rows);

/// Per-sample htm_t scores of every dimension, one row per sample after the
/// rescale warm-up. These are the combiner's inputs.
struct ScoreMatrix {
  std::uint64_t first_index = 0;
  std::vector<std::vector<double>> rows;
};

ScoreMatrix htm_score_matrix(const std::vector<StreamSample>& samples, const DetectorConfig& cfg);

}  // namespace driftwatch
