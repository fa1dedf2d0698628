// Acceptance checks. One PASS/FAIL line per criterion; exit status is
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "driftwatch/baselines.hpp"
#include "driftwatch/cli.hpp"
#include "driftwatch/config.hpp"
#include "driftwatch/datagen.hpp"
#include "driftwatch/detector.hpp"
#include "driftwatch/htm.hpp"
#include "driftwatch/io.hpp"
#include "driftwatch/mlp.hpp"
#include "driftwatch/rng.hpp"
#include "driftwatch/sprt.hpp"

using namespace driftwatch;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<std::uint64_t> combined_onsets(const RunResult& r) {
  std::vector<std::uint64_t> out;
  for (const auto& e : r.events) {
    if (!e.dimension && e.kind == DriftEvent::Kind::kDriftOnset) out.push_back(e.global_time);
  }
  return out;
}

// Wald boundaries evaluated directly from the log-likelihood ratio bounds.
SprtLimits direct_limits(double t, double p0, double p1, double a, double b) {
  const double num_slope = std::log((1 - p0) / (1 - p1));
  const double denom = std::log(p1 / p0) - std::log((1 - p1) / (1 - p0));
  return {(std::log(b / (1 - a)) + t * num_slope) / denom,
          (std::log((1 - b) / a) + t * num_slope) / denom};
}

Outcome criterion1() {
  double worst = 0;
  for (double p0 : {0.3, 0.45})
    for (double p1 : {0.5, 0.65})
      for (double a : {0.01, 0.05})
        for (double b : {0.005, 0.05})
          for (std::uint64_t t : {0, 1, 10, 100, 1000}) {
            const auto got = sprt_limits(t, SprtConfig{p0, p1, a, b, 0.65});
            const auto want = direct_limits(double(t), p0, p1, a, b);
            worst = std::max({worst, std::abs(got.lower - want.lower),
                              std::abs(got.upper - want.upper)});
          }
  const auto anchor = sprt_limits(0, SprtConfig{});
  const bool anchors =
      std::abs(anchor.upper - 14.903) < 1e-3 && std::abs(anchor.lower + 26.147) < 1e-3;
  return {worst <= 1e-9 && anchors, fmt("max abs error %.3g over 80 grid points; upper(0)=%.4f "
                                        "lower(0)=%.4f",
                                        worst, anchor.upper, anchor.lower)};
}

Outcome criterion2() {
  const SprtConfig cfg;
  auto first = [&](int c) -> std::uint64_t {
    SprtState s;
    for (std::uint64_t i = 1; i <= 1000; ++i) {
      const auto d = sprt_step(s, c, cfg).decision;
      if (d != Decision::kContinue) {
        const bool expected = c ? d == Decision::kDriftDetected : d == Decision::kNoDrift;
        return expected ? i : 0;
      }
    }
    return 0;
  };
  const auto ones = first(1), zeros = first(0);
  return {ones == 29 && zeros == 56,
          fmt("all ones -> DriftDetected at t=%llu; all zeros -> NoDrift at t=%llu",
              (unsigned long long)ones, (unsigned long long)zeros)};
}

Outcome criterion3() {
  const auto t0 = Clock::now();
  const auto cfg = preset_config("shock").detector;
  int hits = 0;
  std::vector<double> pre;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = gen_abrupt(500, 2.0, 250, 1.0, seed);
    const auto onsets = combined_onsets(run_stream(as_samples(s.series()), cfg));
    pre.push_back(double(std::count_if(onsets.begin(), onsets.end(),
                                       [](auto t) { return t < 250; })));
    const auto after = std::find_if(onsets.begin(), onsets.end(), [](auto t) { return t > 250; });
    hits += after != onsets.end() && *after <= 320;
  }
  const double frac = hits / 50.0, med = median(pre), secs = seconds_since(t0);
  return {frac >= 0.8 && med == 0 && secs < 60,
          fmt("first onset after t=250 within (250,320] in %.2f of runs (need >= 0.80); median "
              "onsets before t=250 = %.1f (need 0); %.1f s",
              frac, med, secs)};
}

Outcome criterion4() {
  const auto cfg = preset_config("shock").detector;
  int clean = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = gen_no_drift(500, 1.0, seed);
    clean += combined_onsets(run_stream(as_samples(s.series()), cfg)).empty();
  }
  const double frac = clean / 50.0;
  return {frac >= 0.9, fmt("runs with zero DriftOnset events: %.2f (need >= 0.90), window %zu",
                           frac, cfg.rescale.window_size)};
}

Outcome criterion5() {
  const auto cfg = preset_config("periodic").detector;
  const double w_threshold = calibrate_wasserstein_threshold(500, 50, 0.95, 0);
  std::vector<double> proposed, ks, ws, psi;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto x = gen_periodic(500, 250, 0.5, 0.2, seed).series();
    proposed.push_back(double(combined_onsets(run_stream(as_samples(x), cfg)).size()));
    BaselineConfig b;
    b.window = 15;
    b.method = BaselineMethod::kKs;
    ks.push_back(double(rolling_drift_detect(x, b).size()));
    b.window = 25;
    b.method = BaselineMethod::kWasserstein;
    b.wasserstein_threshold = w_threshold;
    ws.push_back(double(rolling_drift_detect(x, b).size()));
    b.method = BaselineMethod::kPsi;
    psi.push_back(double(rolling_drift_detect(x, b).size()));
  }
  const double p = median(proposed), k = median(ks), w = median(ws), s = median(psi);
  return {k > p && w > p && s < k,
          fmt("median alerts: proposed %.1f, KS %.1f, Wasserstein %.1f, PSI %.1f; KS>proposed %s, "
              "Wasserstein>proposed %s, PSI<KS %s",
              p, k, w, s, k > p ? "yes" : "no", w > p ? "yes" : "no", s < k ? "yes" : "no")};
}

double ecdf(const std::vector<double>& xs, double x) {
  return double(std::count_if(xs.begin(), xs.end(), [&](double v) { return v <= x; })) /
         double(xs.size());
}

Outcome criterion6() {
  Rng r(6);
  double worst_ks = 0, worst_w = 0, worst_psi = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(2 + r.below(49)), b(2 + r.below(49));
    for (auto& v : a) v = r.normal();
    for (auto& v : b) v = r.normal(0.3, 1.2);
    std::vector<double> z = a;
    z.insert(z.end(), b.begin(), b.end());
    std::sort(z.begin(), z.end());
    double d = 0, w = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double gap = std::abs(ecdf(a, z[i]) - ecdf(b, z[i]));
      d = std::max(d, gap);
      if (i + 1 < z.size()) w += gap * (z[i + 1] - z[i]);
    }
    worst_ks = std::max(worst_ks, std::abs(ks_two_sample(a, b).statistic - d));
    worst_w = std::max(worst_w, std::abs(wasserstein_1d(a, b) - w));

    const std::size_t bins = 1 + r.below(std::min<std::size_t>(10, a.size()));
    auto sorted = a;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> p(bins, 0), q(bins, 0);
    auto bin_of = [&](double v) {
      std::size_t k = 0;
      for (std::size_t i = 1; i < bins; ++i) k += v >= sorted[i * sorted.size() / bins];
      return k;
    };
    for (double v : a) p[bin_of(v)] += 1.0 / double(a.size());
    for (double v : b) q[bin_of(v)] += 1.0 / double(b.size());
    double psi = 0;
    for (std::size_t i = 0; i < bins; ++i) {
      const double pi = std::max(p[i], 1e-6), qi = std::max(q[i], 1e-6);
      psi += (qi - pi) * std::log(qi / pi);
    }
    worst_psi = std::max(worst_psi, std::abs(psi_score(a, b, bins) - psi));
  }
  const double d_anchor = ks_two_sample(std::vector<double>{1, 3}, std::vector<double>{2, 4}).statistic;
  const double w_anchor = wasserstein_1d(std::vector<double>{0, 1}, std::vector<double>{1, 2});
  const bool ok = worst_ks <= 1e-12 && worst_w <= 1e-12 && worst_psi <= 1e-12 && d_anchor == 0.5 &&
                  w_anchor == 1.0;
  return {ok, fmt("max error KS %.3g, Wasserstein %.3g, PSI %.3g; D anchor %.17g, W anchor %.17g",
                  worst_ks, worst_w, worst_psi, d_anchor, w_anchor)};
}

Outcome criterion7() {
  const double a = calibrate_wasserstein_threshold(500, 50, 0.95, 0);
  const double b = calibrate_wasserstein_threshold(500, 50, 0.95, 0);
  const bool same = std::memcmp(&a, &b, sizeof a) == 0;
  return {same && a > 0 && a < 1,
          fmt("threshold %.17g, rerun %s", a, same ? "bit-identical" : "differs")};
}

Outcome criterion8() {
  HtmModel m{HtmConfig{}};
  std::vector<double> cycle(8);
  for (int i = 0; i < 8; ++i) cycle[i] = (i + 0.5) / 16.0;
  double last_mean = 1;
  for (int c = 0; c < 10; ++c) {
    double sum = 0;
    for (double v : cycle) sum += m.step(v).raw_score;
    last_mean = sum / 8;
  }
  const double novel = m.step(0.9).raw_score;
  return {last_mean < 0.3 && novel > 0.7,
          fmt("mean raw score over cycle 10 = %.3f (need < 0.3); novel value scores %.3f (need "
              "> 0.7)",
              last_mean, novel)};
}

Outcome criterion9() {
  Rng r(9);
  double worst = 0;
  for (int net = 0; net < 20; ++net) {
    MlpConfig cfg{1 + r.below(4), 2 + r.below(4), 2 + r.below(3)};
    cfg.seed = std::uint64_t(net);
    Mlp m = mlp_init(cfg);
    for (Layer* l : {&m.l1, &m.l2, &m.l3})
      for (auto& b : l->b) b = r.uniform(-0.5, 0.5);
    LabeledDataset d;
    for (std::size_t i = 0, n = 4 + r.below(8); i < n; ++i) {
      std::vector<double> x(cfg.input_dim);
      for (auto& v : x) v = r.uniform();
      d.inputs.push_back(x);
      d.labels.push_back(r.bernoulli(0.5));
    }
    const auto g = mlp_gradients(m, d);
    double diff = 0, na = 0, nn = 0;
    Layer* layers[] = {&m.l1, &m.l2, &m.l3};
    const Layer* grads[] = {&g.l1, &g.l2, &g.l3};
    for (int k = 0; k < 3; ++k) {
      for (int part = 0; part < 2; ++part) {
        auto& params = part ? layers[k]->b : layers[k]->w;
        const auto& analytic = part ? grads[k]->b : grads[k]->w;
        for (std::size_t i = 0; i < params.size(); ++i) {
          const double keep = params[i];
          params[i] = keep + 1e-5;
          const double up = mlp_loss(m, d);
          params[i] = keep - 1e-5;
          const double down = mlp_loss(m, d);
          params[i] = keep;
          const double numeric = (up - down) / 2e-5;
          diff += (numeric - analytic[i]) * (numeric - analytic[i]);
          na += analytic[i] * analytic[i];
          nn += numeric * numeric;
        }
      }
    }
    worst = std::max(worst, std::sqrt(diff) / (std::sqrt(na) + std::sqrt(nn)));
  }

  // both channels high -> positive
  Rng t(0);
  LabeledDataset toy;
  for (int i = 0; i < 200; ++i) {
    const bool pos = t.bernoulli(0.3);
    std::vector<double> x = pos ? std::vector<double>{t.uniform(0.7, 1), t.uniform(0.7, 1)}
                                : std::vector<double>{t.uniform(0, 1), t.uniform(0, 0.3)};
    if (!pos && t.bernoulli(0.5)) std::swap(x[0], x[1]);
    toy.inputs.push_back(x);
    toy.labels.push_back(pos);
  }
  MlpConfig cfg;
  cfg.input_dim = 2;
  Mlp m = mlp_init(cfg);
  mlp_train(m, toy);
  const double acc = evaluate(m, toy, 0.5).accuracy();
  return {worst < 1e-5 && acc == 1.0,
          fmt("worst relative gradient error %.3g over 20 networks; toy training accuracy %.3f "
              "after %zu epochs",
              worst, acc, cfg.epochs)};
}

Outcome criterion10() {
  const auto tool = preset_config("combiner");
  const auto s = gen_labeled_multivariate(2000, 6, 0.05, 0);
  auto dcfg = tool.detector;
  dcfg.dimensions = 6;
  const auto scores = htm_score_matrix(as_samples(s.values), dcfg);
  LabeledDataset train, test;
  const std::size_t cut = scores.rows.size() * 7 / 10;
  for (std::size_t i = 0; i < scores.rows.size(); ++i) {
    auto& part = i < cut ? train : test;
    part.inputs.push_back(scores.rows[i]);
    part.labels.push_back((*s.labels)[scores.first_index + i]);
  }
  auto mcfg = tool.mlp;
  mcfg.input_dim = 6;
  Mlp m = mlp_init(mcfg);
  mlp_train(m, train);
  const double thr = threshold_for_fpr(m, train, tool.max_fpr);
  const auto tr = evaluate(m, train, thr), te = evaluate(m, test, thr);
  return {te.recall() >= 0.9,
          fmt("test recall %.3f (need >= 0.9) at test FPR %.3f; threshold %.4f from training "
              "FPR %.3f; synthetic substitute data, %zu test positives",
              te.recall(), te.fpr(), thr, tr.fpr(), te.tp + te.fn)};
}

Outcome criterion11(Clock::time_point suite_start) {
  const auto s = gen_abrupt(500, 2.0, 250, 1.0, 11);
  const auto samples = as_samples(s.series());
  const auto cfg = preset_config("shock").detector;

  const auto batch = run_stream(samples, cfg);
  Detector det(cfg);
  std::vector<DriftEvent> streamed;
  for (const auto& x : samples) {
    auto e = det.process(x);
    streamed.insert(streamed.end(), e.begin(), e.end());
  }
  const bool streaming = streamed == batch.events;

  Detector first(cfg);
  std::vector<DriftEvent> resumed_events;
  for (std::size_t i = 0; i < 200; ++i) {
    auto e = first.process(samples[i]);
    resumed_events.insert(resumed_events.end(), e.begin(), e.end());
  }
  Detector resumed = Detector::deserialize(first.serialize());
  for (std::size_t i = 200; i < samples.size(); ++i) {
    auto e = resumed.process(samples[i]);
    resumed_events.insert(resumed_events.end(), e.begin(), e.end());
  }
  const bool checkpoint = resumed_events == batch.events;

  namespace fs = std::filesystem;
  const auto root = fs::temp_directory_path() / "driftwatch_acceptance";
  fs::remove_all(root);
  std::ostringstream out, err;
  bool replay = false;
  const std::string input = (root / "scenario.csv").string();
  fs::create_directories(root);
  write_file(input, scenario_to_csv(s));
  if (run_cli({"detect", "--input", input, "--trace", "--seed", "11", "--out-dir",
               (root / "a").string()},
              out, err) == kExitOk &&
      run_cli({"replay", "--manifest", (root / "a" / "manifest.json").string(), "--out-dir",
               (root / "b").string()},
              out, err) == kExitOk) {
    replay = true;
    for (const char* f : {"events.jsonl", "windows.json", "trace.csv"}) {
      replay &= read_file((root / "a" / f).string()) == read_file((root / "b" / f).string());
    }
  }
  fs::remove_all(root);
  const double secs = seconds_since(suite_start);
  return {streaming && checkpoint && replay && secs < 300,
          fmt("streaming/batch %s, checkpoint-resume %s, manifest replay %s; acceptance wall "
              "clock %.1f s (need < 300)",
              streaming ? "equal" : "DIFFER", checkpoint ? "equal" : "DIFFER",
              replay ? "bit-identical" : "DIFFER", secs)};
}

}  // namespace

int main() {
  const auto start = Clock::now();
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, criterion1},  {2, criterion2}, {3, criterion3}, {4, criterion4},
      {5, criterion5},  {6, criterion6}, {7, criterion7}, {8, criterion8},
      {9, criterion9},  {10, criterion10},
      {11, [&] { return criterion11(start); }},
  };
  int failed = 0;
  for (const auto& [id, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %2d: %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
