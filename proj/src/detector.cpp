#include "driftwatch/detector.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "driftwatch/errors.hpp"

namespace driftwatch {

namespace {

constexpr std::uint32_t kSnapshotVersion = 1;

void save_htm_config(BinaryWriter& out, const HtmConfig& c) {
  out.put(c.encoder.min_value);
  out.put(c.encoder.max_value);
  out.put<std::uint64_t>(c.encoder.n_bits);
  out.put<std::uint64_t>(c.encoder.active_bits);
  out.put<std::uint64_t>(c.pooler.n_columns);
  out.put<std::uint64_t>(c.pooler.n_active_columns);
  out.put(c.pooler.potential_fraction);
  out.put(c.pooler.permanence_connected);
  out.put(c.pooler.permanence_inc);
  out.put(c.pooler.permanence_dec);
  out.put(c.pooler.seed);
  out.put<std::uint64_t>(c.temporal.cells_per_column);
  out.put<std::uint64_t>(c.temporal.segment_activation_threshold);
  out.put(c.temporal.initial_permanence);
  out.put(c.temporal.permanence_connected);
  out.put(c.temporal.permanence_inc);
  out.put(c.temporal.permanence_dec);
  out.put<std::uint64_t>(c.temporal.max_synapses_per_segment);
  out.put<std::uint64_t>(c.temporal.max_segments_per_cell);
  out.put(c.temporal.seed);
  out.put<std::uint8_t>(static_cast<std::uint8_t>(c.decode_ties));
}

HtmConfig load_htm_config(BinaryReader& in) {
  HtmConfig c;
  c.encoder.min_value = in.get<double>();
  c.encoder.max_value = in.get<double>();
  c.encoder.n_bits = in.get<std::uint64_t>();
  c.encoder.active_bits = in.get<std::uint64_t>();
  c.pooler.n_columns = in.get<std::uint64_t>();
  c.pooler.n_active_columns = in.get<std::uint64_t>();
  c.pooler.potential_fraction = in.get<double>();
  c.pooler.permanence_connected = in.get<double>();
  c.pooler.permanence_inc = in.get<double>();
  c.pooler.permanence_dec = in.get<double>();
  c.pooler.seed = in.get<std::uint64_t>();
  c.temporal.cells_per_column = in.get<std::uint64_t>();
  c.temporal.segment_activation_threshold = in.get<std::uint64_t>();
  c.temporal.initial_permanence = in.get<double>();
  c.temporal.permanence_connected = in.get<double>();
  c.temporal.permanence_inc = in.get<double>();
  c.temporal.permanence_dec = in.get<double>();
  c.temporal.max_synapses_per_segment = in.get<std::uint64_t>();
  c.temporal.max_segments_per_cell = in.get<std::uint64_t>();
  c.temporal.seed = in.get<std::uint64_t>();
  const auto ties = in.get<std::uint8_t>();
  if (ties > 1) throw InputError("corrupt detector snapshot");
  c.decode_ties = static_cast<DecodeTies>(ties);
  return c;
}

}  // namespace

void DetectorConfig::validate() const {
  if (dimensions == 0) throw ConfigError("detector needs at least one dimension");
  if (htm.size() != 1 && htm.size() != dimensions) {
    throw ConfigError("HTM configs must be shared or given per dimension");
  }
  if (sprt.size() != 1 && sprt.size() != dimensions) {
    throw ConfigError("SPRT configs must be shared or given per dimension");
  }
  for (const auto& h : htm) {
    if (auto_range) {
      // Range is filled in after warm-up; check everything else.
      auto probe = h;
      probe.encoder.min_value = 0.0;
      probe.encoder.max_value = 1.0;
      probe.validate();
    } else {
      h.validate();
    }
  }
  for (const auto& s : sprt) s.validate();
  rescale.validate();
}

Detector::Detector(DetectorConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  dims_.reserve(cfg_.dimensions);
  for (std::size_t d = 0; d < cfg_.dimensions; ++d) {
    DimensionState state{std::nullopt, RollingWindow(cfg_.rescale.window_size), {}, {}, 0.0};
    if (!cfg_.auto_range) state.htm.emplace(cfg_.htm_for(d));
    dims_.push_back(std::move(state));
  }
}

HtmConfig Detector::resolved_htm_config(std::size_t dim, const std::vector<double>& warmup) const {
  auto cfg = cfg_.htm_for(dim);
  const auto [lo, hi] = std::minmax_element(warmup.begin(), warmup.end());
  double span = *hi - *lo;
  if (!(span > 0.0)) span = std::max(1.0, std::abs(*lo));
  cfg.encoder.min_value = *lo - span;
  cfg.encoder.max_value = *hi + span;
  return cfg;
}

Detector::DimensionResult Detector::step_dimension(std::size_t dim, std::uint64_t index,
                                                   double value) {
  auto& st = dims_[dim];
  DimensionResult result;

  if (!st.window.full()) {
    st.window.push(value);
    if (st.htm) {
      st.next_prediction = st.htm->step(value).predicted_value;
    } else {
      st.warmup.push_back(value);
      if (st.warmup.size() == cfg_.rescale.window_size) {
        st.htm.emplace(resolved_htm_config(dim, st.warmup));
        for (double v : st.warmup) st.next_prediction = st.htm->step(v).predicted_value;
        st.warmup.clear();
      }
    }
    return result;
  }

  const auto& sprt_cfg = cfg_.sprt_for(dim);
  const double sigma = *rolling_std(st.window, cfg_.rescale.sigma_floor);
  const double htm_t = rescale_score(st.next_prediction, value, sigma, cfg_.rescale);
  st.window.push(value);
  const auto out = st.htm->step(value);
  st.next_prediction = out.predicted_value;

  const int c = binarize(htm_t, sprt_cfg.bin_threshold);
  const auto step = sprt_step(st.sprt, c, sprt_cfg);
  result.decision = step.decision;
  result.trace = TraceRow{index, dim, out.raw_score, htm_t, c, step.cm,
                          step.limits.lower, step.limits.upper};
  if (step.decision != Decision::kContinue) {
    result.event = DriftEvent{index,
                              dim,
                              step.decision == Decision::kDriftDetected
                                  ? DriftEvent::Kind::kDriftOnset
                                  : DriftEvent::Kind::kNoDriftDecision,
                              step.cm,
                              step.limits.upper,
                              step.limits.lower};
  }
  if (step.decision == Decision::kDriftDetected && cfg_.reset_htm_on_drift) {
    const auto resolved = st.htm->config();
    st.htm.emplace(resolved);
    st.next_prediction = value;
  }
  return result;
}

std::vector<DriftEvent> Detector::process(const StreamSample& sample,
                                          std::vector<TraceRow>* trace) {
  if (sample.values.size() != dims_.size()) {
    throw InputError("sample at index " + std::to_string(sample.index) + " has " +
                     std::to_string(sample.values.size()) + " values, expected " +
                     std::to_string(dims_.size()));
  }
  if (last_index_ && sample.index <= *last_index_) {
    throw InputError("sample indices must be strictly increasing (got " +
                     std::to_string(sample.index) + " after " + std::to_string(*last_index_) +
                     ")");
  }
  for (double v : sample.values) {
    if (!std::isfinite(v)) {
      throw InputError("non-finite value at index " + std::to_string(sample.index));
    }
  }

  std::vector<DimensionResult> results(dims_.size());
  if (cfg_.parallel && dims_.size() > 1) {
    std::vector<std::jthread> workers;
    workers.reserve(dims_.size());
    for (std::size_t d = 0; d < dims_.size(); ++d) {
      workers.emplace_back([&, d] { results[d] = step_dimension(d, sample.index, sample.values[d]); });
    }
  } else {
    for (std::size_t d = 0; d < dims_.size(); ++d) {
      results[d] = step_dimension(d, sample.index, sample.values[d]);
    }
  }
  last_index_ = sample.index;
  ++samples_seen_;

  std::vector<DriftEvent> events;
  std::vector<Decision> decisions;
  decisions.reserve(results.size());
  for (auto& r : results) {
    decisions.push_back(r.decision);
    if (r.event) events.push_back(*r.event);
    if (trace && r.trace) trace->push_back(*r.trace);
  }
  if (cfg_.combine) {
    const auto combined = multivariate_combine(decisions);
    if (combined != Decision::kContinue) {
      const auto kind = combined == Decision::kDriftDetected ? DriftEvent::Kind::kDriftOnset
                                                             : DriftEvent::Kind::kNoDriftDecision;
      // Report the statistics of the lowest dimension that reached the verdict.
      auto trigger = std::find_if(events.begin(), events.end(),
                                  [kind](const DriftEvent& e) { return e.kind == kind; });
      auto e = *trigger;
      e.dimension.reset();
      events.push_back(e);
    }
  }
  return events;
}

bool Detector::operator==(const Detector& o) const {
  return dims_ == o.dims_ && samples_seen_ == o.samples_seen_ && last_index_ == o.last_index_;
}

std::string Detector::serialize() const {
  BinaryWriter out;
  out.put_string("driftwatch-detector");
  out.put(kSnapshotVersion);
  out.put<std::uint64_t>(cfg_.dimensions);
  out.put<std::uint64_t>(cfg_.htm.size());
  for (const auto& h : cfg_.htm) save_htm_config(out, h);
  out.put<std::uint64_t>(cfg_.sprt.size());
  for (const auto& s : cfg_.sprt) save(out, s);
  out.put<std::uint64_t>(cfg_.rescale.window_size);
  out.put(cfg_.rescale.k);
  out.put(cfg_.rescale.sigma_floor);
  out.put<std::uint8_t>(cfg_.combine);
  out.put<std::uint8_t>(cfg_.reset_htm_on_drift);
  out.put<std::uint8_t>(cfg_.auto_range);
  out.put<std::uint8_t>(cfg_.parallel);
  out.put(samples_seen_);
  out.put<std::uint8_t>(last_index_.has_value());
  out.put(last_index_.value_or(0));
  for (const auto& st : dims_) {
    out.put<std::uint8_t>(st.htm.has_value());
    if (st.htm) st.htm->save(out);
    st.window.save(out);
    save(out, st.sprt);
    out.put_vector(st.warmup);
    out.put(st.next_prediction);
  }
  return out.take();
}

Detector Detector::deserialize(const std::string& bytes) {
  BinaryReader in(bytes);
  in.expect_tag("driftwatch-detector");
  if (in.get<std::uint32_t>() != kSnapshotVersion) {
    throw InputError("unsupported detector snapshot version");
  }
  DetectorConfig cfg;
  cfg.dimensions = in.get<std::uint64_t>();
  cfg.htm.resize(in.get<std::uint64_t>());
  for (auto& h : cfg.htm) h = load_htm_config(in);
  cfg.sprt.resize(in.get<std::uint64_t>());
  for (auto& s : cfg.sprt) s = load_sprt_config(in);
  cfg.rescale.window_size = in.get<std::uint64_t>();
  cfg.rescale.k = in.get<double>();
  cfg.rescale.sigma_floor = in.get<double>();
  cfg.combine = in.get<std::uint8_t>() != 0;
  cfg.reset_htm_on_drift = in.get<std::uint8_t>() != 0;
  cfg.auto_range = in.get<std::uint8_t>() != 0;
  cfg.parallel = in.get<std::uint8_t>() != 0;

  // Build with fixed ranges off so no HTM is constructed only to be replaced.
  const bool auto_range = cfg.auto_range;
  cfg.auto_range = true;
  Detector det(cfg);
  det.cfg_.auto_range = auto_range;
  det.samples_seen_ = in.get<std::uint64_t>();
  const bool has_last = in.get<std::uint8_t>() != 0;
  const auto last = in.get<std::uint64_t>();
  if (has_last) det.last_index_ = last;
  for (auto& st : det.dims_) {
    if (in.get<std::uint8_t>() != 0) st.htm.emplace(HtmModel::load(in));
    st.window = RollingWindow::load(in);
    st.sprt = load_sprt_state(in);
    st.warmup = in.get_vector<double>();
    st.next_prediction = in.get<double>();
  }
  if (!in.at_end()) throw InputError("trailing bytes after detector snapshot");
  return det;
}

RunResult run_stream(const std::vector<StreamSample>& samples, const DetectorConfig& cfg,
                     std::vector<TraceRow>* trace) {
  Detector det(cfg);
  RunResult result;
  for (const auto& s : samples) {
    auto events = det.process(s, trace);
    result.events.insert(result.events.end(), events.begin(), events.end());
  }
  result.windows = drift_windows(result.events);
  return result;
}

std::vector<DriftWindow> drift_windows(const std::vector<DriftEvent>& events) {
  const bool has_combined = std::any_of(events.begin(), events.end(),
                                        [](const DriftEvent& e) { return !e.dimension; });
  std::vector<std::uint64_t> onsets;
  for (const auto& e : events) {
    if (e.kind != DriftEvent::Kind::kDriftOnset) continue;
    if (has_combined && e.dimension) continue;
    if (onsets.empty() || onsets.back() != e.global_time) onsets.push_back(e.global_time);
  }
  std::vector<DriftWindow> windows;
  for (std::size_t i = 0; i < onsets.size(); ++i) {
    DriftWindow w{onsets[i], std::nullopt};
    if (i + 1 < onsets.size()) w.end = onsets[i + 1];
    windows.push_back(w);
  }
  return windows;
}

std::vector<StreamSample> as_samples(const std::vector<double>& series) {
  std::vector<StreamSample> out;
  out.reserve(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) out.push_back({i, {series[i]}});
  return out;
}

std::vector<StreamSample> as_samples(const std::vector<std::vector<double>>& rows) {
  std::vector<StreamSample> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out.push_back({i, rows[i]});
  return out;
}

ScoreMatrix htm_score_matrix(const std::vector<StreamSample>& samples, const DetectorConfig& cfg) {
  Detector det(cfg);
  ScoreMatrix m;
  std::vector<TraceRow> trace;
  for (const auto& s : samples) {
    trace.clear();
    det.process(s, &trace);
    if (trace.empty()) continue;
    if (m.rows.empty()) m.first_index = s.index;
    std::vector<double> row(cfg.dimensions, 0.0);
    for (const auto& r : trace) row[r.dim] = r.htm_t;
    m.rows.push_back(std::move(row));
  }
  return m;
}

}  // namespace driftwatch
