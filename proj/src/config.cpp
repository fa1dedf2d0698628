#include "driftwatch/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "driftwatch/errors.hpp"

namespace driftwatch {

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* what) {
  throw ConfigError("config key '" + key + "': expected " + what + ", got '" + value + "'");
}

double parse_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || *end || !std::isfinite(x)) bad_value(key, v, "a finite number");
  return x;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  if (v.empty() || !std::all_of(v.begin(), v.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    bad_value(key, v, "a non-negative integer");
  }
  errno = 0;
  const auto x = std::strtoull(v.c_str(), nullptr, 10);
  if (errno == ERANGE) bad_value(key, v, "an integer in range");
  return x;
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  return static_cast<std::size_t>(parse_u64(key, v));
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true or false");
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}
std::string fmt(std::uint64_t x) { return std::to_string(x); }
std::string fmt(bool x) { return x ? "true" : "false"; }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Key {
  std::string name;
  std::function<std::string(const ToolConfig&)> get;
  std::function<void(ToolConfig&, const std::string&, const std::string&)> set;
};

HtmConfig& htm(ToolConfig& c) { return c.detector.htm.front(); }
const HtmConfig& htm(const ToolConfig& c) { return c.detector.htm.front(); }
SprtConfig& sprt(ToolConfig& c) { return c.detector.sprt.front(); }
const SprtConfig& sprt(const ToolConfig& c) { return c.detector.sprt.front(); }

#define DW_DOUBLE(NAME, EXPR)                                                              \
  Key{NAME, [](const ToolConfig& c) { return fmt(static_cast<double>(EXPR)); },            \
      [](ToolConfig& c, const std::string& k, const std::string& v) { EXPR = parse_double(k, v); }}
#define DW_SIZE(NAME, EXPR)                                                                \
  Key{NAME, [](const ToolConfig& c) { return fmt(static_cast<std::uint64_t>(EXPR)); },     \
      [](ToolConfig& c, const std::string& k, const std::string& v) { EXPR = parse_size(k, v); }}
#define DW_U64(NAME, EXPR)                                                                 \
  Key{NAME, [](const ToolConfig& c) { return fmt(static_cast<std::uint64_t>(EXPR)); },     \
      [](ToolConfig& c, const std::string& k, const std::string& v) { EXPR = parse_u64(k, v); }}
#define DW_BOOL(NAME, EXPR)                                                                \
  Key{NAME, [](const ToolConfig& c) { return fmt(static_cast<bool>(EXPR)); },              \
      [](ToolConfig& c, const std::string& k, const std::string& v) { EXPR = parse_bool(k, v); }}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      DW_SIZE("detector.dimensions", c.detector.dimensions),
      DW_BOOL("detector.combine", c.detector.combine),
      DW_BOOL("detector.reset_htm_on_drift", c.detector.reset_htm_on_drift),
      DW_BOOL("detector.parallel", c.detector.parallel),
      DW_DOUBLE("encoder.min_value", htm(c).encoder.min_value),
      DW_DOUBLE("encoder.max_value", htm(c).encoder.max_value),
      DW_SIZE("encoder.n_bits", htm(c).encoder.n_bits),
      DW_SIZE("encoder.active_bits", htm(c).encoder.active_bits),
      DW_BOOL("detector.auto_range", c.detector.auto_range),
      DW_SIZE("pooler.n_columns", htm(c).pooler.n_columns),
      DW_SIZE("pooler.n_active_columns", htm(c).pooler.n_active_columns),
      DW_DOUBLE("pooler.potential_fraction", htm(c).pooler.potential_fraction),
      DW_DOUBLE("pooler.permanence_connected", htm(c).pooler.permanence_connected),
      DW_DOUBLE("pooler.permanence_inc", htm(c).pooler.permanence_inc),
      DW_DOUBLE("pooler.permanence_dec", htm(c).pooler.permanence_dec),
      DW_U64("pooler.seed", htm(c).pooler.seed),
      DW_SIZE("temporal.cells_per_column", htm(c).temporal.cells_per_column),
      DW_SIZE("temporal.segment_activation_threshold", htm(c).temporal.segment_activation_threshold),
      DW_DOUBLE("temporal.initial_permanence", htm(c).temporal.initial_permanence),
      DW_DOUBLE("temporal.permanence_connected", htm(c).temporal.permanence_connected),
      DW_DOUBLE("temporal.permanence_inc", htm(c).temporal.permanence_inc),
      DW_DOUBLE("temporal.permanence_dec", htm(c).temporal.permanence_dec),
      DW_SIZE("temporal.max_synapses_per_segment", htm(c).temporal.max_synapses_per_segment),
      DW_SIZE("temporal.max_segments_per_cell", htm(c).temporal.max_segments_per_cell),
      DW_U64("temporal.seed", htm(c).temporal.seed),
      Key{"htm.decode_ties",
          [](const ToolConfig& c) {
            return std::string(htm(c).decode_ties == DecodeTies::kLowest ? "lowest" : "middle");
          },
          [](ToolConfig& c, const std::string& k, const std::string& v) {
            if (v == "lowest") {
              htm(c).decode_ties = DecodeTies::kLowest;
            } else if (v == "middle") {
              htm(c).decode_ties = DecodeTies::kMiddle;
            } else {
              bad_value(k, v, "lowest or middle");
            }
          }},
      DW_SIZE("rescale.window_size", c.detector.rescale.window_size),
      DW_DOUBLE("rescale.k", c.detector.rescale.k),
      DW_DOUBLE("rescale.sigma_floor", c.detector.rescale.sigma_floor),
      DW_DOUBLE("sprt.p_null", sprt(c).p_null),
      DW_DOUBLE("sprt.p_alt", sprt(c).p_alt),
      DW_DOUBLE("sprt.a", sprt(c).alpha),
      DW_DOUBLE("sprt.b", sprt(c).beta),
      DW_DOUBLE("sprt.bin_threshold", sprt(c).bin_threshold),
      DW_SIZE("baseline.window", c.baseline.window),
      Key{"baseline.method", [](const ToolConfig& c) { return std::string(to_string(c.baseline.method)); },
          [](ToolConfig& c, const std::string& k, const std::string& v) {
            try {
              c.baseline.method = parse_baseline_method(v);
            } catch (const ConfigError&) {
              bad_value(k, v, "ks, wasserstein or psi");
            }
          }},
      DW_DOUBLE("baseline.alpha", c.baseline.alpha),
      Key{"baseline.wasserstein_threshold",
          [](const ToolConfig& c) {
            return c.baseline.wasserstein_threshold ? fmt(*c.baseline.wasserstein_threshold)
                                                    : std::string("auto");
          },
          [](ToolConfig& c, const std::string& k, const std::string& v) {
            if (v == "auto") {
              c.baseline.wasserstein_threshold.reset();
            } else {
              c.baseline.wasserstein_threshold = parse_double(k, v);
            }
          }},
      DW_DOUBLE("baseline.psi_threshold", c.baseline.psi_threshold),
      DW_SIZE("baseline.psi_bins", c.baseline.psi_bins),
      DW_SIZE("calibration.iterations", c.calibration.iterations),
      DW_SIZE("calibration.sample_size", c.calibration.sample_size),
      DW_DOUBLE("calibration.quantile", c.calibration.quantile),
      DW_SIZE("mlp.hidden1", c.mlp.hidden1),
      DW_SIZE("mlp.hidden2", c.mlp.hidden2),
      DW_DOUBLE("mlp.learning_rate", c.mlp.learning_rate),
      DW_SIZE("mlp.epochs", c.mlp.epochs),
      DW_SIZE("mlp.batch_size", c.mlp.batch_size),
      DW_U64("mlp.seed", c.mlp.seed),
      DW_BOOL("mlp.binary_inputs", c.mlp.binary_inputs),
      DW_DOUBLE("mlp.bin_threshold", c.mlp.bin_threshold),
      DW_DOUBLE("combiner.max_fpr", c.max_fpr),
      DW_DOUBLE("combiner.threshold", c.combine_threshold),
      Key{"scenario.kind", [](const ToolConfig& c) { return c.scenario.kind; },
          [](ToolConfig& c, const std::string&, const std::string& v) { c.scenario.kind = v; }},
      Key{"bench.methods",
          [](const ToolConfig& c) {
            std::string out;
            for (const auto& m : c.bench.methods) out += (out.empty() ? "" : ",") + m;
            return out;
          },
          [](ToolConfig& c, const std::string&, const std::string& v) {
            c.bench.methods = split_list(v);
          }},
      DW_SIZE("bench.seeds", c.bench.seeds),
      DW_SIZE("bench.ks_window", c.bench.ks_window),
      DW_SIZE("bench.wasserstein_window", c.bench.wasserstein_window),
      DW_SIZE("bench.psi_window", c.bench.psi_window),
  };
  return table;
}

#undef DW_DOUBLE
#undef DW_SIZE
#undef DW_U64
#undef DW_BOOL

template <typename F>
void section(const char* name, F check) {
  try {
    check();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config section '") + name + "': " + e.what());
  }
}

}  // namespace

void ToolConfig::validate() const {
  section("encoder", [&] {
    if (!detector.auto_range) htm(*this).encoder.validate();
  });
  section("pooler", [&] { htm(*this).pooler.validate(); });
  section("temporal", [&] { htm(*this).temporal.validate(); });
  section("rescale", [&] { detector.rescale.validate(); });
  section("sprt", [&] { sprt(*this).validate(); });
  section("detector", [&] { detector.validate(); });
  section("baseline", [&] { baseline.validate(); });
  section("calibration", [&] {
    if (calibration.iterations < 100) throw ConfigError("iterations must be at least 100");
    if (calibration.sample_size == 0) throw ConfigError("sample_size must be positive");
    if (!(calibration.quantile >= 0.0 && calibration.quantile <= 1.0)) {
      throw ConfigError("quantile must lie in [0, 1]");
    }
  });
  section("mlp", [&] { mlp.validate(); });
  section("combiner", [&] {
    if (!(max_fpr >= 0.0 && max_fpr < 1.0)) throw ConfigError("max_fpr must lie in [0, 1)");
    if (!(combine_threshold >= 0.0 && combine_threshold <= 1.0)) {
      throw ConfigError("threshold must lie in [0, 1]");
    }
  });
  section("bench", [&] {
    if (bench.methods.empty()) throw ConfigError("methods must not be empty");
    for (const auto& m : bench.methods) {
      if (m != "proposed") parse_baseline_method(m);
    }
    if (bench.seeds == 0) throw ConfigError("seeds must be positive");
    if (bench.ks_window < 2 || bench.wasserstein_window < 2 || bench.psi_window < 2) {
      throw ConfigError("baseline windows must be at least 2");
    }
  });
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"shock", "slow-mean", "periodic", "combiner"};
  return names;
}

ToolConfig preset_config(const std::string& name) {
  ToolConfig c;
  c.preset = name;
  c.detector.auto_range = true;
  if (name == "shock") {
    c.detector.rescale.window_size = 15;
  } else if (name == "slow-mean") {
    c.detector.rescale.window_size = 35;
  } else if (name == "periodic") {
    c.detector.rescale.window_size = 25;
  } else if (name == "combiner") {
    c.detector.rescale.window_size = 15;
    c.detector.rescale.k = 3.0;
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return c;
}

void apply_setting(ToolConfig& cfg, const std::string& key, const std::string& value) {
  const auto& table = keys();
  const auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) { return k.name == key; });
  if (it != table.end()) {
    it->set(cfg, key, value);
  } else if (key.rfind("scenario.", 0) == 0) {
    cfg.scenario.params[key.substr(9)] = parse_double(key, value);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
  cfg.explicit_keys.insert(key);
  if ((key == "encoder.min_value" || key == "encoder.max_value") &&
      !cfg.is_explicit("detector.auto_range")) {
    cfg.detector.auto_range = false;
  }
}

ToolConfig parse_config(const std::string& text, const std::string& preset_override) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    entries.emplace_back(key, trim(line.substr(eq + 1)));
  }
  std::string preset = "shock";
  std::size_t first = 0;
  if (!entries.empty() && entries[0].first == "preset") {
    preset = entries[0].second;
    first = 1;
  }
  if (!preset_override.empty()) preset = preset_override;
  ToolConfig cfg = preset_config(preset);
  for (std::size_t i = first; i < entries.size(); ++i) {
    if (entries[i].first == "preset") {
      throw ConfigError("config key 'preset' must be the first entry");
    }
    apply_setting(cfg, entries[i].first, entries[i].second);
  }
  cfg.validate();
  return cfg;
}

ToolConfig load_config_file(const std::string& path, const std::string& preset_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), preset_override);
}

std::vector<std::pair<std::string, std::string>> config_entries(const ToolConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("preset", cfg.preset);
  for (const auto& k : keys()) out.emplace_back(k.name, k.get(cfg));
  for (const auto& [name, value] : cfg.scenario.params) out.emplace_back("scenario." + name, fmt(value));
  return out;
}

std::string config_to_text(const ToolConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : config_entries(cfg)) out += k + " = " + v + "\n";
  return out;
}

}  // namespace driftwatch
