#include <gtest/gtest.h>

#include <cmath>

#include "driftwatch/datagen.hpp"
#include "driftwatch/detector.hpp"
#include "driftwatch/errors.hpp"
#include "driftwatch/rescale.hpp"
#include "driftwatch/rng.hpp"
#include "driftwatch/sprt.hpp"

using namespace driftwatch;

namespace {

// Direct evaluation of the Wald boundaries, kept separate from the library.
SprtLimits oracle_limits(double t, double p0, double p1, double a, double b) {
  const double denom = std::log(p1 / p0) - std::log((1 - p1) / (1 - p0));
  const double slope = std::log((1 - p0) / (1 - p1));
  return {(std::log(b / (1 - a)) + t * slope) / denom, (std::log((1 - b) / a) + t * slope) / denom};
}

std::optional<std::uint64_t> first_decision(const std::vector<int>& c, Decision want,
                                            const SprtConfig& cfg) {
  SprtState s;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto r = sprt_step(s, c[i], cfg);
    if (r.decision == want) return i + 1;
    if (r.decision != Decision::kContinue) return std::nullopt;
  }
  return std::nullopt;
}

DetectorConfig far_range_config() {
  DetectorConfig cfg;
  cfg.htm[0].encoder.min_value = 1000;
  cfg.htm[0].encoder.max_value = 2000;
  return cfg;
}

std::vector<double> normal_series(std::size_t n, std::uint64_t seed) {
  return gen_no_drift(n, 1.0, seed).series();
}

}  // namespace

TEST(RollingStd, SampleDeviation) {
  RollingWindow w(15);
  for (double v : {1.0, 2.0, 3.0}) w.push(v);
  EXPECT_DOUBLE_EQ(*rolling_std(w, 1e-9), 1.0);
}

TEST(RollingStd, ConstantWindowHitsFloor) {
  RollingWindow w(5);
  for (int i = 0; i < 5; ++i) w.push(4.0);
  EXPECT_EQ(*rolling_std(w, 1e-9), 1e-9);
}

TEST(RollingStd, SingleValueIsWarmUp) {
  RollingWindow w(5);
  w.push(5.0);
  EXPECT_FALSE(rolling_std(w, 1e-9).has_value());
}

TEST(RollingWindow, KeepsMostRecent) {
  RollingWindow w(3);
  for (double v : {1.0, 2.0, 3.0, 4.0}) w.push(v);
  EXPECT_EQ(w.contents(), (std::vector<double>{2.0, 3.0, 4.0}));
}

TEST(RescaleScore, Examples) {
  RescaleConfig cfg;
  EXPECT_EQ(rescale_score(1.5, 1.5, 1.0, cfg), 0.0);
  EXPECT_EQ(rescale_score(0.0, 2.0, 1.0, cfg), 1.0);
  EXPECT_EQ(rescale_score(0.0, 0.5, 1.0, cfg), 0.5);
  EXPECT_THROW(rescale_score(NAN, 0.5, 1.0, cfg), InputError);
}

TEST(RescaleScore, ScaleEquivariantAndMonotone) {
  Rng r(31);
  for (int i = 0; i < 2000; ++i) {
    RescaleConfig cfg;
    cfg.k = r.uniform(0.2, 3.0);
    const double p = r.normal(), o = r.normal(), s = r.uniform(0.1, 2.0);
    const double c = std::exp2(static_cast<double>(r.below(10)) - 5.0);  // exact scaling
    const double base = rescale_score(p, o, s, cfg);
    ASSERT_GE(base, 0.0);
    ASSERT_LE(base, 1.0);
    ASSERT_EQ(rescale_score(c * p, c * o, c * s, cfg), base);
    const double further = o + (o >= p ? 1 : -1) * r.uniform(0, 1);
    ASSERT_GE(rescale_score(p, further, s, cfg), base);
    RescaleConfig bigger = cfg;
    bigger.k *= 1.5;
    ASSERT_LE(rescale_score(p, o, s, bigger), base);
  }
}

TEST(Binarize, StrictThreshold) {
  EXPECT_EQ(binarize(0.0, 0.65), 0);
  EXPECT_EQ(binarize(1.0, 0.65), 1);
  EXPECT_EQ(binarize(0.65, 0.65), 0);
  EXPECT_THROW(binarize(1.1, 0.65), InputError);
}

TEST(SprtLimits, MatchesDirectEvaluation) {
  for (double p0 : {0.3, 0.45})
    for (double p1 : {0.5, 0.65})
      for (double a : {0.01, 0.05})
        for (double b : {0.005, 0.05})
          for (std::uint64_t t : {0, 1, 10, 100, 1000}) {
            SprtConfig cfg{p0, p1, a, b, 0.65};
            const auto got = sprt_limits(t, cfg);
            const auto want = oracle_limits(double(t), p0, p1, a, b);
            ASSERT_NEAR(got.lower, want.lower, 1e-9);
            ASSERT_NEAR(got.upper, want.upper, 1e-9);
            ASSERT_LT(got.lower, got.upper);
          }
}

TEST(SprtLimits, DefaultAnchors) {
  const SprtConfig cfg;
  EXPECT_NEAR(sprt_limits(0, cfg).upper, 14.903, 1e-3);
  EXPECT_NEAR(sprt_limits(0, cfg).lower, -26.147, 1e-3);
  EXPECT_NEAR(sprt_limits(100, cfg).upper, 62.40, 5e-3);
  EXPECT_NEAR(sprt_limits(100, cfg).lower, 21.35, 5e-3);
}

TEST(SprtLimits, SharedConstantSlope) {
  const SprtConfig cfg;
  const double slope = sprt_limits(1, cfg).upper - sprt_limits(0, cfg).upper;
  for (std::uint64_t t = 0; t < 500; ++t) {
    ASSERT_NEAR(sprt_limits(t + 1, cfg).upper - sprt_limits(t, cfg).upper, slope, 1e-9);
    ASSERT_NEAR(sprt_limits(t + 1, cfg).lower - sprt_limits(t, cfg).lower, slope, 1e-9);
  }
}

TEST(SprtLimits, SymmetricConfig) {
  SprtConfig cfg{0.4, 0.6, 0.05, 0.05, 0.65};
  EXPECT_NEAR(sprt_limits(0, cfg).upper, -sprt_limits(0, cfg).lower, 1e-12);
}

TEST(SprtLimits, EqualHypothesesRejected) {
  SprtConfig cfg;
  cfg.p_alt = cfg.p_null;
  EXPECT_THROW(sprt_limits(0, cfg), ConfigError);
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(SprtStep, AllOnesDriftAt29) {
  const SprtConfig cfg;
  EXPECT_EQ(first_decision(std::vector<int>(200, 1), Decision::kDriftDetected, cfg), 29u);
  EXPECT_LE(28.0, sprt_limits(28, cfg).upper);
  EXPECT_GT(29.0, sprt_limits(29, cfg).upper);
}

TEST(SprtStep, AllZerosNoDriftAt56) {
  const SprtConfig cfg;
  EXPECT_EQ(first_decision(std::vector<int>(200, 0), Decision::kNoDrift, cfg), 56u);
  EXPECT_LT(sprt_limits(55, cfg).lower, 0.0);
  EXPECT_GT(sprt_limits(56, cfg).lower, 0.0);
}

TEST(SprtStep, SingleZeroContinues) {
  SprtState s;
  EXPECT_EQ(sprt_step(s, 0, SprtConfig{}).decision, Decision::kContinue);
}

TEST(SprtStep, EqualityContinues) {
  // (1 - b) / a = p1(1 - p0) / (p0(1 - p1)) puts upper(0) at 1 and the slope at 1/2,
  // so upper(2) = 2 exactly.
  SprtConfig cfg{0.4, 0.6, 0.4, 0.1, 0.65};
  ASSERT_EQ(sprt_limits(2, cfg).upper, 2.0);
  SprtState s{1, 1};
  EXPECT_EQ(sprt_step(s, 1, cfg).decision, Decision::kContinue);
  SprtState past{1, 1};
  sprt_step(past, 1, cfg);
  EXPECT_EQ(sprt_step(past, 1, cfg).decision, Decision::kDriftDetected);
}

TEST(SprtStep, RestartsAfterEitherDecision) {
  const SprtConfig cfg;
  SprtState s;
  SprtStepResult r{};
  for (int i = 0; i < 29; ++i) r = sprt_step(s, 1, cfg);
  EXPECT_EQ(r.decision, Decision::kDriftDetected);
  EXPECT_EQ(r.cm, 29u);
  EXPECT_EQ(r.t, 29u);
  EXPECT_EQ(s.t, 0u);
  EXPECT_EQ(s.cm, 0u);
  // the restarted test needs another 29 ones
  EXPECT_EQ(first_decision(std::vector<int>(60, 1), Decision::kDriftDetected, cfg), 29u);
  for (int i = 0; i < 56; ++i) r = sprt_step(s, 0, cfg);
  EXPECT_EQ(r.decision, Decision::kNoDrift);
  EXPECT_EQ(s.t, 0u);
  EXPECT_EQ(s.cm, 0u);
}

TEST(SprtStep, EventInvariantsOnRandomInput) {
  const SprtConfig cfg;
  SprtState s;
  Rng r(3);
  for (int i = 0; i < 20000; ++i) {
    const auto step = sprt_step(s, r.bernoulli(0.47), cfg);
    ASSERT_LE(s.cm, s.t);
    if (step.decision == Decision::kDriftDetected) ASSERT_GT(double(step.cm), step.limits.upper);
    if (step.decision == Decision::kNoDrift) ASSERT_LT(double(step.cm), step.limits.lower);
  }
}

TEST(SprtStep, MoreOnesNeverDelayDrift) {
  const SprtConfig cfg;
  Rng r(5);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<int> c(400), d(400);
    for (std::size_t i = 0; i < c.size(); ++i) {
      c[i] = r.bernoulli(0.55);
      d[i] = c[i] | r.bernoulli(0.1);
    }
    // first time the cumulative count crosses, ignoring NoDrift restarts
    auto first_upper = [&](const std::vector<int>& x) -> std::uint64_t {
      std::uint64_t cm = 0;
      for (std::size_t t = 1; t <= x.size(); ++t) {
        cm += x[t - 1];
        if (double(cm) > sprt_limits(t, cfg).upper) return t;
      }
      return UINT64_MAX;
    };
    ASSERT_LE(first_upper(d), first_upper(c));
  }
}

TEST(SprtStep, WaldTypeOneBound) {
  const SprtConfig cfg;
  Rng r(2024);
  const int runs = 2000;
  int drift = 0;
  for (int i = 0; i < runs; ++i) {
    SprtState s;
    Decision d = Decision::kContinue;
    while (d == Decision::kContinue) d = sprt_step(s, r.bernoulli(cfg.p_null), cfg).decision;
    drift += d == Decision::kDriftDetected;
  }
  EXPECT_LE(double(drift) / runs, cfg.alpha + 0.03);
}

TEST(Combine, Examples) {
  using D = Decision;
  const std::vector<D> a{D::kContinue, D::kDriftDetected, D::kContinue};
  const std::vector<D> b{D::kNoDrift, D::kNoDrift};
  const std::vector<D> c{D::kContinue, D::kNoDrift};
  EXPECT_EQ(multivariate_combine(a), D::kDriftDetected);
  EXPECT_EQ(multivariate_combine(b), D::kNoDrift);
  EXPECT_EQ(multivariate_combine(c), D::kContinue);
  EXPECT_THROW(multivariate_combine(std::vector<D>{}), InputError);
}

TEST(DriftEventJson, RoundTrip) {
  DriftEvent a{12, 3, DriftEvent::Kind::kDriftOnset, 29, 28.68, -12.5};
  DriftEvent b{40, std::nullopt, DriftEvent::Kind::kNoDriftDecision, 0, 30.1, 0.45};
  EXPECT_EQ(drift_event_from_json(to_json_line(a)), a);
  EXPECT_EQ(drift_event_from_json(to_json_line(b)), b);
  EXPECT_EQ(to_json_line(b).find("\"dimension\""), std::string::npos);
  EXPECT_THROW(drift_event_from_json("{"), InputError);
}

TEST(Detector, WarmUpEmitsNothing) {
  Detector det(far_range_config());
  const auto xs = normal_series(15, 1);
  std::vector<TraceRow> trace;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    EXPECT_TRUE(det.process({i, {xs[i]}}, &trace).empty());
  }
  EXPECT_TRUE(trace.empty());
  EXPECT_EQ(det.sprt_state(0).t, 0u);
}

TEST(Detector, SaturatedScoresGiveOnsetAt29thStep) {
  const auto cfg = far_range_config();
  const auto xs = normal_series(120, 2);
  std::vector<TraceRow> trace;
  const auto run = run_stream(as_samples(xs), cfg, &trace);
  ASSERT_GE(trace.size(), 29u);
  for (std::size_t i = 0; i < 29; ++i) ASSERT_GT(trace[i].htm_t, 0.65) << i;
  ASSERT_FALSE(run.events.empty());
  EXPECT_EQ(run.events[0].global_time, 15u + 28u);
  EXPECT_EQ(run.events[0].kind, DriftEvent::Kind::kDriftOnset);
  EXPECT_EQ(run.events[0].cm_at_decision, 29u);
}

TEST(Detector, ThresholdOneNeverDrifts) {
  auto cfg = far_range_config();
  cfg.sprt[0].bin_threshold = 1.0;
  const auto run = run_stream(as_samples(normal_series(300, 2)), cfg);
  for (const auto& e : run.events) EXPECT_EQ(e.kind, DriftEvent::Kind::kNoDriftDecision);
  EXPECT_FALSE(run.events.empty());
}

TEST(Detector, EmptyStream) {
  const auto run = run_stream({}, DetectorConfig{});
  EXPECT_TRUE(run.events.empty());
  EXPECT_TRUE(run.windows.empty());
}

TEST(Detector, ConfigErrors) {
  DetectorConfig cfg;
  cfg.sprt[0].p_alt = cfg.sprt[0].p_null;
  EXPECT_THROW(Detector{cfg}, ConfigError);
  DetectorConfig zero;
  zero.dimensions = 0;
  EXPECT_THROW(Detector{zero}, ConfigError);
  DetectorConfig mismatched;
  mismatched.dimensions = 3;
  mismatched.sprt = {SprtConfig{}, SprtConfig{}};
  EXPECT_THROW(Detector{mismatched}, ConfigError);
}

TEST(Detector, InputErrors) {
  DetectorConfig cfg;
  cfg.dimensions = 2;
  Detector det(cfg);
  EXPECT_THROW(det.process({0, {1.0}}), InputError);
  det.process({5, {0.1, 0.2}});
  EXPECT_THROW(det.process({5, {0.1, 0.2}}), InputError);
  EXPECT_THROW(det.process({6, {NAN, 0.2}}), InputError);
}

TEST(Detector, StreamingEqualsBatch) {
  DetectorConfig cfg;
  cfg.auto_range = true;
  const auto samples = as_samples(gen_abrupt(400, 2.0, 200, 1.0, 9).series());
  std::vector<TraceRow> batch_trace, stream_trace;
  const auto batch = run_stream(samples, cfg, &batch_trace);
  Detector det(cfg);
  std::vector<DriftEvent> events;
  for (const auto& s : samples) {
    auto e = det.process(s, &stream_trace);
    events.insert(events.end(), e.begin(), e.end());
  }
  EXPECT_EQ(events, batch.events);
  EXPECT_EQ(drift_windows(events), batch.windows);
  ASSERT_EQ(stream_trace.size(), batch_trace.size());
}

TEST(Detector, CheckpointResumeIsIdentical) {
  DetectorConfig cfg;
  cfg.auto_range = true;
  const auto samples = as_samples(gen_abrupt(400, 2.0, 200, 1.0, 10).series());
  const auto full = run_stream(samples, cfg);
  for (std::size_t k : {5u, 15u, 137u, 399u}) {
    Detector det(cfg);
    std::vector<DriftEvent> events;
    for (std::size_t i = 0; i < k; ++i) {
      auto e = det.process(samples[i]);
      events.insert(events.end(), e.begin(), e.end());
    }
    auto resumed = Detector::deserialize(det.serialize());
    EXPECT_TRUE(resumed == det);
    for (std::size_t i = k; i < samples.size(); ++i) {
      auto e = resumed.process(samples[i]);
      events.insert(events.end(), e.begin(), e.end());
    }
    EXPECT_EQ(events, full.events) << k;
  }
}

TEST(Detector, DimensionsAreIsolated) {
  DetectorConfig cfg;
  cfg.dimensions = 2;
  cfg.auto_range = true;
  cfg.combine = false;
  const auto x = gen_abrupt(300, 2.0, 150, 1.0, 1).series();
  const auto y1 = gen_no_drift(300, 1.0, 2).series();
  const auto y2 = gen_periodic(300, 50, 3.0, 0.5, 3).series();
  std::vector<std::vector<double>> rows1, rows2;
  for (std::size_t i = 0; i < x.size(); ++i) {
    rows1.push_back({x[i], y1[i]});
    rows2.push_back({x[i], y2[i]});
  }
  auto dim0 = [](const RunResult& r) {
    std::vector<DriftEvent> out;
    for (const auto& e : r.events)
      if (e.dimension == 0u) out.push_back(e);
    return out;
  };
  const auto a = dim0(run_stream(as_samples(rows1), cfg));
  const auto b = dim0(run_stream(as_samples(rows2), cfg));
  EXPECT_EQ(a, b);
  DetectorConfig single;
  single.auto_range = true;
  single.combine = false;
  EXPECT_EQ(a, run_stream(as_samples(x), single).events);
}

TEST(Detector, ParallelEqualsSequential) {
  auto s = gen_labeled_multivariate(400, 4, 0.05, 6);
  DetectorConfig cfg;
  cfg.dimensions = 4;
  cfg.auto_range = true;
  std::vector<TraceRow> t1, t2;
  const auto seq = run_stream(as_samples(s.values), cfg, &t1);
  cfg.parallel = true;
  const auto par = run_stream(as_samples(s.values), cfg, &t2);
  EXPECT_EQ(seq.events, par.events);
  ASSERT_EQ(t1.size(), t2.size());
  for (std::size_t i = 0; i < t1.size(); ++i) {
    ASSERT_EQ(t1[i].htm_t, t2[i].htm_t);
    ASSERT_EQ(t1[i].dim, t2[i].dim);
  }
}

TEST(Detector, CombinedEventFollowsDimensionEvents) {
  auto s = gen_labeled_multivariate(600, 3, 0.05, 4);
  DetectorConfig cfg;
  cfg.dimensions = 3;
  cfg.auto_range = true;
  const auto run = run_stream(as_samples(s.values), cfg);
  for (std::size_t i = 0; i < run.events.size(); ++i) {
    const auto& e = run.events[i];
    if (e.dimension) continue;
    ASSERT_GT(i, 0u);
    ASSERT_EQ(run.events[i - 1].global_time, e.global_time);
    if (e.kind == DriftEvent::Kind::kDriftOnset) EXPECT_GT(double(e.cm_at_decision), e.upper_limit);
    if (e.kind == DriftEvent::Kind::kNoDriftDecision) {
      EXPECT_LT(double(e.cm_at_decision), e.lower_limit);
    }
  }
}

TEST(Detector, ScoreMatrixShape) {
  auto s = gen_labeled_multivariate(200, 3, 0.05, 4);
  DetectorConfig cfg;
  cfg.dimensions = 3;
  cfg.auto_range = true;
  const auto m = htm_score_matrix(as_samples(s.values), cfg);
  EXPECT_EQ(m.first_index, 15u);
  ASSERT_EQ(m.rows.size(), 185u);
  for (const auto& r : m.rows) {
    ASSERT_EQ(r.size(), 3u);
    for (double v : r) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
  }
}

TEST(DriftWindows, Examples) {
  auto onset = [](std::uint64_t t) {
    return DriftEvent{t, std::nullopt, DriftEvent::Kind::kDriftOnset, 0, 0, 0};
  };
  EXPECT_EQ(drift_windows({onset(260), onset(410)}),
            (std::vector<DriftWindow>{{260, 410}, {410, std::nullopt}}));
  EXPECT_TRUE(drift_windows({}).empty());
  EXPECT_EQ(drift_windows({onset(7)}), (std::vector<DriftWindow>{{7, std::nullopt}}));
}

TEST(DriftWindows, PerDimensionOnsetsWithoutCombined) {
  const std::vector<DriftEvent> events = {
      {100, 1u, DriftEvent::Kind::kDriftOnset, 0, 0, 0},
      {150, 0u, DriftEvent::Kind::kNoDriftDecision, 0, 0, 0},
      {220, 0u, DriftEvent::Kind::kDriftOnset, 0, 0, 0}};
  EXPECT_EQ(drift_windows(events), (std::vector<DriftWindow>{{100, 220}, {220, std::nullopt}}));
}
