#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "driftwatch/baselines.hpp"
#include "driftwatch/detector.hpp"
#include "driftwatch/mlp.hpp"

namespace driftwatch {

struct CalibrationConfig {
  std::size_t iterations = 500;
  std::size_t sample_size = 50;
  double quantile = 0.95;
};

struct ScenarioConfig {
  std::string kind = "abrupt";
  std::map<std::string, double> params;
};

struct BenchConfig {
  std::vector<std::string> methods{"proposed", "ks", "wasserstein", "psi"};
  std::size_t seeds = 20;
  std::size_t ks_window = 15;
  std::size_t wasserstein_window = 25;
  std::size_t psi_window = 25;
};

struct ToolConfig {
  std::string preset = "shock";
  DetectorConfig detector;
  BaselineConfig baseline;
  CalibrationConfig calibration;
  MlpConfig mlp;
  double max_fpr = 0.05;
  double combine_threshold = 0.5;
  ScenarioConfig scenario;
  BenchConfig bench;
  // Keys set by a file or override rather than inherited from the preset.
  std::set<std::string> explicit_keys;

  bool is_explicit(const std::string& key) const { return explicit_keys.count(key) != 0; }
  /// Validates every section; messages name the offending section.
  void validate() const;
};

const std::vector<std::string>& preset_names();

/// shock (window 15), slow-mean (35), periodic (25), and combiner (shock with
/// k = 3). All share bin_threshold 0.65, p_null 0.45, p_alt 0.5, a 0.05,
/// b 0.005, and use auto-ranged encoders.
ToolConfig preset_config(const std::string& name);

/// Sets one dotted key. Throws ConfigError naming the key on an unknown key
/// or a malformed value.
void apply_setting(ToolConfig& cfg, const std::string& key, const std::string& value);

/// Parses `key = value` lines ('#' starts a comment) on top of a preset. A
/// `preset` key, if present, must come first; `preset_override` wins over it.
ToolConfig parse_config(const std::string& text, const std::string& preset_override = "");
ToolConfig load_config_file(const std::string& path, const std::string& preset_override = "");

/// Every key with its current value, in an order that parse_config accepts.
std::vector<std::pair<std::string, std::string>> config_entries(const ToolConfig& cfg);
std::string config_to_text(const ToolConfig& cfg);

}  // namespace driftwatch
