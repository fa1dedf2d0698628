#include "driftwatch/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "driftwatch/baselines.hpp"
#include "driftwatch/datagen.hpp"
#include "driftwatch/errors.hpp"
#include "driftwatch/io.hpp"
#include "driftwatch/mlp.hpp"

namespace driftwatch {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::string path_in(const Invocation& inv, const std::string& name) {
  return (fs::path(inv.out_dir) / name).string();
}

void emit(Invocation& inv, const std::string& name, const std::string& content) {
  write_file(path_in(inv, name), content);
  inv.outputs.push_back(name);
}

const std::string& require_option(const Invocation& inv, const std::string& key) {
  const auto it = inv.options.find(key);
  if (it == inv.options.end() || it->second.empty()) {
    throw ConfigError(inv.subcommand + " needs --" + key);
  }
  return it->second;
}

bool flag(const Invocation& inv, const std::string& key) {
  const auto it = inv.options.find(key);
  return it != inv.options.end() && it->second == "true";
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double resolve_wasserstein_threshold(const ToolConfig& cfg, std::uint64_t seed) {
  if (cfg.baseline.wasserstein_threshold) return *cfg.baseline.wasserstein_threshold;
  return calibrate_wasserstein_threshold(cfg.calibration.iterations, cfg.calibration.sample_size,
                                         cfg.calibration.quantile, seed);
}

// Scores CSV with an optional trailing label column.
LabeledDataset read_scores(const std::string& text, bool& has_labels) {
  const auto header_end = text.find('\n');
  std::string header = text.substr(0, header_end);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  has_labels = header.size() >= 5 && header.substr(header.size() - 5) == "label";
  if (has_labels) return dataset_from_csv(text);
  std::string with_labels;
  std::istringstream is(text);
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    with_labels += line + (first ? ",label\n" : ",0\n");
    first = false;
  }
  return dataset_from_csv(with_labels);
}

void cmd_simulate(Invocation& inv, std::ostream& out) {
  const auto s = make_scenario(inv.config.scenario.kind, inv.config.scenario.params, inv.seed);
  emit(inv, "scenario.csv", scenario_to_csv(s));
  emit(inv, "scenario.json", scenario_to_json(s) + "\n");
  out << "simulated " << s.kind << ": " << s.length() << " rows, " << s.dimensions()
      << " dimension(s)\n";
}

void cmd_detect(Invocation& inv, std::ostream& out) {
  const auto csv = parse_stream_csv(read_file(require_option(inv, "input")));
  auto& det_cfg = inv.config.detector;
  if (inv.config.is_explicit("detector.dimensions") && det_cfg.dimensions != csv.dimensions) {
    throw InputError("input has " + std::to_string(csv.dimensions) +
                     " dimension(s) but detector.dimensions is " +
                     std::to_string(det_cfg.dimensions));
  }
  det_cfg.dimensions = csv.dimensions;
  inv.config.explicit_keys.insert("detector.dimensions");
  inv.config.validate();

  const bool want_trace = flag(inv, "trace");
  const bool want_scores = flag(inv, "scores");
  std::vector<TraceRow> trace;
  Detector det(det_cfg);
  std::vector<DriftEvent> events;
  std::ostringstream scores;
  if (want_scores) {
    for (std::size_t j = 0; j < csv.dimensions; ++j) scores << (j ? "," : "") << "score_" << j;
    scores << (csv.labels ? ",label\n" : "\n");
  }
  std::vector<TraceRow> step_rows;
  for (std::size_t i = 0; i < csv.samples.size(); ++i) {
    step_rows.clear();
    auto ev = det.process(csv.samples[i], &step_rows);
    events.insert(events.end(), ev.begin(), ev.end());
    if (want_trace) trace.insert(trace.end(), step_rows.begin(), step_rows.end());
    if (want_scores && !step_rows.empty()) {
      std::vector<double> row(csv.dimensions, 0.0);
      for (const auto& r : step_rows) row[r.dim] = r.htm_t;
      std::string line;
      for (std::size_t j = 0; j < row.size(); ++j) {
        line += (j ? "," : "") + format_double(row[j]);
      }
      if (csv.labels) line += "," + std::to_string((*csv.labels)[i]);
      scores << line << '\n';
    }
  }
  std::string jsonl;
  std::size_t onsets = 0;
  for (const auto& e : events) {
    jsonl += to_json_line(e) + "\n";
    if (!e.dimension && e.kind == DriftEvent::Kind::kDriftOnset) ++onsets;
  }
  emit(inv, "events.jsonl", jsonl);
  ojson windows = ojson::array();
  for (const auto& w : drift_windows(events)) {
    windows.push_back({{"start", w.start}, {"end", w.end ? ojson(*w.end) : ojson(nullptr)}});
  }
  emit(inv, "windows.json", windows.dump(2) + "\n");
  if (want_trace) emit(inv, "trace.csv", trace_to_csv(trace));
  if (want_scores) emit(inv, "scores.csv", scores.str());
  out << events.size() << " events, " << onsets << " combined drift onsets, "
      << drift_windows(events).size() << " drift windows\n";
}

void cmd_baseline(Invocation& inv, std::ostream& out) {
  const auto csv = parse_stream_csv(read_file(require_option(inv, "input")));
  if (csv.dimensions != 1) throw InputError("baseline detectors need a univariate input");
  inv.config.validate();
  std::vector<double> series;
  for (const auto& s : csv.samples) series.push_back(s.values[0]);
  auto bcfg = inv.config.baseline;
  if (bcfg.method == BaselineMethod::kWasserstein) {
    bcfg.wasserstein_threshold = resolve_wasserstein_threshold(inv.config, inv.seed);
  }
  const auto alerts = rolling_drift_detect(series, bcfg);
  std::string jsonl;
  for (auto a : alerts) {
    a.t = csv.samples[a.t].index;
    jsonl += to_json_line(a, bcfg.method) + "\n";
  }
  emit(inv, "alerts.jsonl", jsonl);
  out << alerts.size() << " " << to_string(bcfg.method) << " alerts\n";
}

void cmd_calibrate(Invocation& inv, std::ostream& out) {
  inv.config.validate();
  const auto& c = inv.config.calibration;
  const double thr =
      calibrate_wasserstein_threshold(c.iterations, c.sample_size, c.quantile, inv.seed);
  ojson j;
  j["threshold"] = thr;
  j["iterations"] = c.iterations;
  j["sample_size"] = c.sample_size;
  j["quantile"] = c.quantile;
  j["seed"] = inv.seed;
  emit(inv, "threshold.json", j.dump(2) + "\n");
  out << format_double(thr) << "\n";
}

void cmd_train(Invocation& inv, std::ostream& out) {
  const auto data = dataset_from_csv(read_file(require_option(inv, "input")));
  if (data.size() == 0) throw InputError("training CSV has no rows");
  inv.config.mlp.input_dim = data.inputs.front().size();
  inv.config.validate();
  auto prepared = data;
  for (auto& row : prepared.inputs) row = prepare_inputs(inv.config.mlp, row);
  Mlp m = mlp_init(inv.config.mlp);
  const auto losses = mlp_train(m, prepared);
  const double thr = threshold_for_fpr(m, data, inv.config.max_fpr);
  const auto metrics = evaluate(m, data, thr);
  emit(inv, "model.txt", mlp_save(m));
  std::string loss_csv = "epoch,loss\n";
  for (std::size_t e = 0; e < losses.size(); ++e) {
    loss_csv += std::to_string(e + 1) + "," + format_double(losses[e]) + "\n";
  }
  emit(inv, "loss.csv", loss_csv);
  ojson j;
  j["threshold"] = thr;
  j["max_fpr"] = inv.config.max_fpr;
  j["train_recall"] = metrics.recall();
  j["train_fpr"] = metrics.fpr();
  j["train_accuracy"] = metrics.accuracy();
  emit(inv, "combiner.json", j.dump(2) + "\n");
  out << "trained on " << data.size() << " rows; threshold " << format_double(thr)
      << " gives training recall " << format_double(metrics.recall()) << " at FPR "
      << format_double(metrics.fpr()) << "\n";
}

void cmd_score(Invocation& inv, std::ostream& out) {
  inv.config.validate();
  const Mlp m = mlp_load(read_file(require_option(inv, "model")));
  bool has_labels = false;
  const auto data = read_scores(read_file(require_option(inv, "input")), has_labels);
  const double thr = inv.config.combine_threshold;
  std::string csv = "row,probability,decision\n";
  for (std::size_t r = 0; r < data.size(); ++r) {
    const auto x = prepare_inputs(m.cfg, data.inputs[r]);
    const double p = mlp_forward(m, x);
    csv += std::to_string(r) + "," + format_double(p) + "," + (p > thr ? "1" : "0") + "\n";
  }
  emit(inv, "predictions.csv", csv);
  if (has_labels) {
    const auto metrics = evaluate(m, data, thr);
    ojson j;
    j["threshold"] = thr;
    j["tp"] = metrics.tp;
    j["fp"] = metrics.fp;
    j["tn"] = metrics.tn;
    j["fn"] = metrics.fn;
    j["recall"] = metrics.recall();
    j["fpr"] = metrics.fpr();
    j["accuracy"] = metrics.accuracy();
    emit(inv, "metrics.json", j.dump(2) + "\n");
    out << "recall " << format_double(metrics.recall()) << ", FPR "
        << format_double(metrics.fpr()) << "\n";
  } else {
    out << "scored " << data.size() << " rows\n";
  }
}

void cmd_bench(Invocation& inv, std::ostream& out) {
  auto& cfg = inv.config;
  cfg.validate();
  struct MethodRun {
    std::string name;
    std::size_t window;
    std::vector<double> counts;
    std::vector<double> delays;
    std::size_t detected = 0;
  };
  std::vector<MethodRun> runs;
  for (const auto& name : cfg.bench.methods) {
    std::size_t w = cfg.detector.rescale.window_size;
    if (name == "ks") w = cfg.bench.ks_window;
    if (name == "wasserstein") w = cfg.bench.wasserstein_window;
    if (name == "psi") w = cfg.bench.psi_window;
    runs.push_back({name, w, {}, {}, 0});
  }
  const bool needs_w = std::find(cfg.bench.methods.begin(), cfg.bench.methods.end(),
                                 "wasserstein") != cfg.bench.methods.end();
  const double w_thr = needs_w ? resolve_wasserstein_threshold(cfg, inv.seed) : 0.0;

  std::string series_csv = "seed,t,value,mean\n";
  std::string alerts_csv = "seed,method,t\n";
  for (std::size_t k = 0; k < cfg.bench.seeds; ++k) {
    const std::uint64_t seed = inv.seed + k;
    const auto s = make_scenario(cfg.scenario.kind, cfg.scenario.params, seed);
    if (s.dimensions() != 1) throw ConfigError("bench needs a univariate scenario");
    const auto series = s.series();
    if (k == 0) {
      for (std::size_t t = 0; t < series.size(); ++t) {
        series_csv += std::to_string(seed) + "," + std::to_string(t) + "," +
                      format_double(series[t]) + "," + format_double(s.mean_trace[t]) + "\n";
      }
    }
    for (auto& run : runs) {
      std::vector<std::uint64_t> times;
      if (run.name == "proposed") {
        auto dc = cfg.detector;
        dc.dimensions = 1;
        for (const auto& e : run_stream(as_samples(series), dc).events) {
          if (!e.dimension && e.kind == DriftEvent::Kind::kDriftOnset) times.push_back(e.global_time);
        }
      } else {
        auto bc = cfg.baseline;
        bc.method = parse_baseline_method(run.name);
        bc.window = run.window;
        if (bc.method == BaselineMethod::kWasserstein) bc.wasserstein_threshold = w_thr;
        for (const auto& a : rolling_drift_detect(series, bc)) times.push_back(a.t);
      }
      run.counts.push_back(static_cast<double>(times.size()));
      if (s.change_point) {
        const auto first = std::find_if(times.begin(), times.end(),
                                        [&](std::uint64_t t) { return t >= *s.change_point; });
        if (first != times.end()) {
          ++run.detected;
          run.delays.push_back(static_cast<double>(*first - *s.change_point));
        }
      }
      if (k == 0) {
        for (auto t : times) {
          alerts_csv += std::to_string(seed) + "," + run.name + "," + std::to_string(t) + "\n";
        }
      }
    }
  }
  std::ostringstream table;
  table << "method,window,median_alerts,mean_alerts,runs_detected,median_first_delay\n";
  for (const auto& run : runs) {
    double mean = 0.0;
    for (double c : run.counts) mean += c / static_cast<double>(run.counts.size());
    table << run.name << ',' << run.window << ',' << format_double(median(run.counts)) << ','
          << format_double(mean) << ',' << run.detected << ','
          << (run.delays.empty() ? std::string("NA") : format_double(median(run.delays)))
          << '\n';
  }
  emit(inv, "bench.csv", table.str());
  emit(inv, "plot_series.csv", series_csv);
  emit(inv, "plot_alerts.csv", alerts_csv);
  out << table.str();
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("DRIFTWATCH_SEED");
  if (!v || !*v) return std::nullopt;
  try {
    std::size_t used = 0;
    const auto s = std::stoull(v, &used);
    if (used != std::string(v).size()) throw std::invalid_argument(v);
    return s;
  } catch (const std::exception&) {
    throw ConfigError(std::string("DRIFTWATCH_SEED must be a non-negative integer, got '") + v +
                      "'");
  }
}

}  // namespace

void execute(Invocation inv, std::ostream& out) {
  fs::create_directories(inv.out_dir);
  inv.outputs.clear();
  const auto& sc = inv.subcommand;
  if (sc == "simulate") {
    cmd_simulate(inv, out);
  } else if (sc == "detect") {
    cmd_detect(inv, out);
  } else if (sc == "baseline") {
    cmd_baseline(inv, out);
  } else if (sc == "calibrate-wasserstein") {
    cmd_calibrate(inv, out);
  } else if (sc == "train-combiner") {
    cmd_train(inv, out);
  } else if (sc == "score-combiner") {
    cmd_score(inv, out);
  } else if (sc == "bench") {
    cmd_bench(inv, out);
  } else {
    throw ConfigError("unknown subcommand '" + sc + "'");
  }
  write_file(path_in(inv, "manifest.json"), manifest_json(inv));
}

std::string manifest_json(const Invocation& inv) {
  ojson j;
  j["tool"] = "driftwatch";
  j["version"] = kToolVersion;
  j["subcommand"] = inv.subcommand;
  j["seed"] = inv.seed;
  j["options"] = inv.options;
  ojson cfg = ojson::object();
  for (const auto& [k, v] : config_entries(inv.config)) cfg[k] = v;
  j["config"] = cfg;
  j["out_dir"] = inv.out_dir;
  j["outputs"] = inv.outputs;
  j["created_utc"] = utc_now();
  return j.dump(2) + "\n";
}

Invocation invocation_from_manifest(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("manifest is not valid JSON: ") + e.what());
  }
  try {
    Invocation inv;
    inv.subcommand = j.at("subcommand").get<std::string>();
    inv.seed = j.at("seed").get<std::uint64_t>();
    inv.options = j.at("options").get<std::map<std::string, std::string>>();
    inv.out_dir = j.at("out_dir").get<std::string>();
    std::string cfg_text;
    for (const auto& [k, v] : j.at("config").items()) cfg_text += k + " = " + v.get<std::string>() + "\n";
    inv.config = parse_config(cfg_text);
    return inv;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("manifest is missing fields: ") + e.what());
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"driftwatch: streaming drift detection with HTM scoring and a restarting SPRT"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::string config_path, preset, input, out_dir = ".", model, manifest, scenario_kind, method;
  std::vector<std::string> params, sets;
  std::optional<std::uint64_t> seed_flag;
  std::optional<std::size_t> window;
  std::optional<double> threshold;
  bool trace = false, scores = false;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Config file of key = value lines");
    sub->add_option("--preset", preset, "shock, slow-mean, periodic or combiner");
    sub->add_option("--seed", seed_flag, "Seed (falls back to DRIFTWATCH_SEED, then 0)");
    sub->add_option("--out-dir", out_dir, "Output directory");
    sub->add_option("--set", sets, "Override a config key: key=value");
  };
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic scenario");
  common(simulate);
  simulate->add_option("--scenario", scenario_kind, "periodic, monotonic, abrupt, no-drift, labeled");
  simulate->add_option("--param", params, "Scenario parameter: name=value");

  auto* detect = app.add_subcommand("detect", "Run the drift detector on a CSV stream");
  common(detect);
  detect->add_option("--input", input, "Input CSV")->required();
  detect->add_flag("--trace", trace, "Also write the per-step trace.csv");
  detect->add_flag("--scores", scores, "Also write per-sample scores.csv for the combiner");

  auto* baseline = app.add_subcommand("baseline", "Run a rolling-window baseline detector");
  common(baseline);
  baseline->add_option("--input", input, "Input CSV")->required();
  baseline->add_option("--method", method, "ks, wasserstein or psi");
  baseline->add_option("--window", window, "Window size");

  auto* calibrate = app.add_subcommand("calibrate-wasserstein", "Monte Carlo Wasserstein threshold");
  common(calibrate);

  auto* train = app.add_subcommand("train-combiner", "Train the multivariate combiner");
  common(train);
  train->add_option("--input", input, "Training CSV score_0,...,label")->required();

  auto* score = app.add_subcommand("score-combiner", "Apply a trained combiner");
  common(score);
  score->add_option("--input", input, "Scores CSV")->required();
  score->add_option("--model", model, "Model file from train-combiner")->required();
  score->add_option("--threshold", threshold, "Decision threshold (default 0.5)");

  auto* bench = app.add_subcommand("bench", "Compare the detector with the baselines");
  common(bench);
  bench->add_option("--scenario", scenario_kind, "Scenario kind");
  bench->add_option("--param", params, "Scenario parameter: name=value");

  auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay->add_option("--manifest", manifest, "manifest.json to replay")->required();
  replay->add_option("--out-dir", out_dir, "Output directory");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << kToolVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (replay->parsed()) {
      auto inv = invocation_from_manifest(read_file(manifest));
      if (!replay->count("--out-dir")) {
        throw ConfigError("replay needs --out-dir so the original outputs are not overwritten");
      }
      inv.out_dir = out_dir;
      execute(inv, out);
      return kExitOk;
    }
    CLI::App* sub = app.get_subcommands().front();
    Invocation inv;
    inv.subcommand = sub->get_name();
    inv.out_dir = out_dir;
    inv.config = config_path.empty() ? preset_config(preset.empty() ? "shock" : preset)
                                     : load_config_file(config_path, preset);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
      apply_setting(inv.config, s.substr(0, eq), s.substr(eq + 1));
    }
    if (!scenario_kind.empty()) apply_setting(inv.config, "scenario.kind", scenario_kind);
    for (const auto& p : params) {
      const auto eq = p.find('=');
      if (eq == std::string::npos) throw ConfigError("--param expects name=value, got '" + p + "'");
      apply_setting(inv.config, "scenario." + p.substr(0, eq), p.substr(eq + 1));
    }
    if (!method.empty()) apply_setting(inv.config, "baseline.method", method);
    if (window) apply_setting(inv.config, "baseline.window", std::to_string(*window));
    if (threshold) {
      std::ostringstream t;
      t << std::setprecision(17) << *threshold;
      apply_setting(inv.config, "combiner.threshold", t.str());
    }
    const auto seed = seed_flag ? seed_flag : env_seed();
    inv.seed = seed.value_or(0);
    if (seed) {
      const auto s = std::to_string(*seed);
      if (inv.subcommand == "detect" || inv.subcommand == "bench") {
        if (!inv.config.is_explicit("pooler.seed")) apply_setting(inv.config, "pooler.seed", s);
        if (!inv.config.is_explicit("temporal.seed")) apply_setting(inv.config, "temporal.seed", s);
      }
      if (inv.subcommand == "train-combiner" && !inv.config.is_explicit("mlp.seed")) {
        apply_setting(inv.config, "mlp.seed", s);
      }
    }
    if (!input.empty()) inv.options["input"] = input;
    if (!model.empty()) inv.options["model"] = model;
    if (inv.subcommand == "detect") {
      inv.options["trace"] = trace ? "true" : "false";
      inv.options["scores"] = scores ? "true" : "false";
    }
    inv.config.validate();
    execute(inv, out);
    return kExitOk;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace driftwatch
