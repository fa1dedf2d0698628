#include "driftwatch/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <sstream>

#include "driftwatch/errors.hpp"
#include "driftwatch/rng.hpp"

namespace driftwatch {

namespace {

constexpr double kProbFloor = 1e-12;

Layer make_layer(std::size_t in, std::size_t out) {
  return Layer{in, out, std::vector<double>(in * out, 0.0), std::vector<double>(out, 0.0)};
}

// y = W x + b
void affine(const Layer& l, std::span<const double> x, std::vector<double>& y) {
  y.assign(l.b.begin(), l.b.end());
  for (std::size_t o = 0; o < l.out; ++o) {
    const double* row = &l.w[o * l.in];
    double acc = 0.0;
    for (std::size_t i = 0; i < l.in; ++i) acc += row[i] * x[i];
    y[o] += acc;
  }
}

void relu(std::vector<double>& v) {
  for (auto& x : v) x = std::max(0.0, x);
}

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct Activations {
  std::vector<double> h1, h2;
  double z3 = 0.0;
  double p = 0.0;
};

void forward(const Mlp& m, std::span<const double> x, Activations& a) {
  affine(m.l1, x, a.h1);
  relu(a.h1);
  affine(m.l2, a.h1, a.h2);
  relu(a.h2);
  std::vector<double> out;
  affine(m.l3, a.h2, out);
  a.z3 = out[0];
  a.p = logistic(a.z3);
}

double bce(double p, int y) {
  p = std::clamp(p, kProbFloor, 1.0 - kProbFloor);
  return y ? -std::log(p) : -std::log(1.0 - p);
}

void check_input(const Mlp& m, std::span<const double> x) {
  if (x.size() != m.cfg.input_dim) {
    throw InputError("combiner expects " + std::to_string(m.cfg.input_dim) + " inputs, got " +
                     std::to_string(x.size()));
  }
}

std::vector<std::size_t> all_rows(const LabeledDataset& data) {
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

}  // namespace

void MlpConfig::validate() const {
  if (input_dim == 0) throw ConfigError("mlp.input_dim must be positive");
  if (hidden1 == 0 || hidden2 == 0) throw ConfigError("mlp hidden sizes must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("mlp.learning_rate must be positive");
  if (batch_size == 0) throw ConfigError("mlp.batch_size must be positive");
  if (!(bin_threshold >= 0.0 && bin_threshold <= 1.0)) {
    throw ConfigError("mlp.bin_threshold must lie in [0, 1]");
  }
}

void LabeledDataset::validate(std::size_t input_dim) const {
  if (inputs.size() != labels.size()) throw InputError("dataset rows and labels differ in count");
  for (std::size_t r = 0; r < inputs.size(); ++r) {
    if (inputs[r].size() != input_dim) {
      throw InputError("dataset row " + std::to_string(r) + " has the wrong width");
    }
    for (double v : inputs[r]) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw InputError("dataset row " + std::to_string(r) + " has a score outside [0, 1]");
      }
    }
    if (labels[r] != 0 && labels[r] != 1) {
      throw InputError("dataset row " + std::to_string(r) + " has a non-binary label");
    }
  }
}

Mlp mlp_init(const MlpConfig& cfg, double scale) {
  cfg.validate();
  Mlp m;
  m.cfg = cfg;
  m.l1 = make_layer(cfg.input_dim, cfg.hidden1);
  m.l2 = make_layer(cfg.hidden1, cfg.hidden2);
  m.l3 = make_layer(cfg.hidden2, 1);
  Rng rng(cfg.seed);
  for (Layer* l : {&m.l1, &m.l2, &m.l3}) {
    const double s = scale * std::sqrt(6.0 / static_cast<double>(l->in));
    for (auto& w : l->w) w = rng.uniform(-s, s);
  }
  return m;
}

double mlp_forward(const Mlp& m, std::span<const double> x) {
  check_input(m, x);
  Activations a;
  forward(m, x, a);
  return a.p;
}

double mlp_loss(const Mlp& m, const LabeledDataset& data, std::span<const std::size_t> rows) {
  if (rows.empty()) throw InputError("loss needs a non-empty batch");
  Activations a;
  double total = 0.0;
  for (auto r : rows) {
    check_input(m, data.inputs[r]);
    forward(m, data.inputs[r], a);
    total += bce(a.p, data.labels[r]);
  }
  return total / static_cast<double>(rows.size());
}

double mlp_loss(const Mlp& m, const LabeledDataset& data) {
  const auto rows = all_rows(data);
  return mlp_loss(m, data, rows);
}

MlpGradients mlp_gradients(const Mlp& m, const LabeledDataset& data,
                           std::span<const std::size_t> rows) {
  if (rows.empty()) throw InputError("gradients need a non-empty batch");
  MlpGradients g{make_layer(m.l1.in, m.l1.out), make_layer(m.l2.in, m.l2.out),
                 make_layer(m.l3.in, m.l3.out)};
  Activations a;
  std::vector<double> d2(m.l2.out), d1(m.l1.out);
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  for (auto r : rows) {
    const auto& x = data.inputs[r];
    check_input(m, x);
    forward(m, x, a);
    // d(BCE)/dz for a logistic output is p - y.
    const double d3 = (a.p - data.labels[r]) * inv_n;
    for (std::size_t j = 0; j < m.l3.in; ++j) g.l3.w[j] += d3 * a.h2[j];
    g.l3.b[0] += d3;
    for (std::size_t j = 0; j < m.l2.out; ++j) {
      d2[j] = a.h2[j] > 0.0 ? d3 * m.l3.w[j] : 0.0;
    }
    for (std::size_t o = 0; o < m.l2.out; ++o) {
      for (std::size_t i = 0; i < m.l2.in; ++i) g.l2.w[o * m.l2.in + i] += d2[o] * a.h1[i];
      g.l2.b[o] += d2[o];
    }
    for (std::size_t i = 0; i < m.l1.out; ++i) {
      double acc = 0.0;
      for (std::size_t o = 0; o < m.l2.out; ++o) acc += d2[o] * m.l2.w[o * m.l2.in + i];
      d1[i] = a.h1[i] > 0.0 ? acc : 0.0;
    }
    for (std::size_t o = 0; o < m.l1.out; ++o) {
      for (std::size_t i = 0; i < m.l1.in; ++i) g.l1.w[o * m.l1.in + i] += d1[o] * x[i];
      g.l1.b[o] += d1[o];
    }
  }
  return g;
}

MlpGradients mlp_gradients(const Mlp& m, const LabeledDataset& data) {
  const auto rows = all_rows(data);
  return mlp_gradients(m, data, rows);
}

std::vector<double> mlp_train(Mlp& m, const LabeledDataset& data) {
  const auto& cfg = m.cfg;
  cfg.validate();
  if (data.size() == 0) throw InputError("training needs a non-empty dataset");
  data.validate(cfg.input_dim);

  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  MlpGradients mom{make_layer(m.l1.in, m.l1.out), make_layer(m.l2.in, m.l2.out),
                   make_layer(m.l3.in, m.l3.out)};
  MlpGradients vel = mom;
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  auto rows = all_rows(data);
  std::vector<double> trace;
  trace.reserve(cfg.epochs);
  std::uint64_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = rows.size(); i > 1; --i) std::swap(rows[i - 1], rows[rng.below(i)]);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < rows.size(); start += cfg.batch_size) {
      const std::span<const std::size_t> batch(
          rows.data() + start, std::min(cfg.batch_size, rows.size() - start));
      epoch_loss += mlp_loss(m, data, batch);
      ++batches;
      const auto g = mlp_gradients(m, data, batch);
      ++step;
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      Layer* params[] = {&m.l1, &m.l2, &m.l3};
      Layer* ms[] = {&mom.l1, &mom.l2, &mom.l3};
      Layer* vs[] = {&vel.l1, &vel.l2, &vel.l3};
      const Layer* gs[] = {&g.l1, &g.l2, &g.l3};
      for (int k = 0; k < 3; ++k) {
        auto update = [&](std::vector<double>& p, std::vector<double>& mv, std::vector<double>& vv,
                          const std::vector<double>& gv) {
          for (std::size_t i = 0; i < p.size(); ++i) {
            mv[i] = kBeta1 * mv[i] + (1.0 - kBeta1) * gv[i];
            vv[i] = kBeta2 * vv[i] + (1.0 - kBeta2) * gv[i] * gv[i];
            p[i] -= cfg.learning_rate * (mv[i] / c1) / (std::sqrt(vv[i] / c2) + kEps);
          }
        };
        update(params[k]->w, ms[k]->w, vs[k]->w, gs[k]->w);
        update(params[k]->b, ms[k]->b, vs[k]->b, gs[k]->b);
      }
    }
    trace.push_back(epoch_loss / static_cast<double>(batches));
  }
  return trace;
}

bool combine_detect(std::span<const double> scores, const Mlp& m, double threshold) {
  const auto x = prepare_inputs(m.cfg, scores);
  return mlp_forward(m, x) > threshold;
}

std::vector<double> prepare_inputs(const MlpConfig& cfg, std::span<const double> scores) {
  std::vector<double> x(scores.begin(), scores.end());
  if (cfg.binary_inputs) {
    for (auto& v : x) v = v > cfg.bin_threshold ? 1.0 : 0.0;
  }
  return x;
}

double threshold_for_fpr(const Mlp& m, const LabeledDataset& data, double max_fpr) {
  if (!(max_fpr >= 0.0 && max_fpr < 1.0)) throw ConfigError("max_fpr must lie in [0, 1)");
  std::vector<double> neg;
  for (std::size_t r = 0; r < data.size(); ++r) {
    if (!data.labels[r]) neg.push_back(mlp_forward(m, prepare_inputs(m.cfg, data.inputs[r])));
  }
  if (neg.empty()) throw InputError("threshold sweep needs at least one negative row");
  std::sort(neg.begin(), neg.end(), std::greater<>());
  const auto allowed =
      static_cast<std::size_t>(std::floor(max_fpr * static_cast<double>(neg.size())));
  return neg[std::min(allowed, neg.size() - 1)];
}

BinaryMetrics evaluate(const Mlp& m, const LabeledDataset& data, double threshold) {
  BinaryMetrics out;
  for (std::size_t r = 0; r < data.size(); ++r) {
    const bool hit = combine_detect(data.inputs[r], m, threshold);
    if (data.labels[r]) {
      hit ? ++out.tp : ++out.fn;
    } else {
      hit ? ++out.fp : ++out.tn;
    }
  }
  return out;
}

std::string mlp_save(const Mlp& m) {
  std::ostringstream os;
  const auto& c = m.cfg;
  os << "driftwatch-mlp 1\n";
  os << "input_dim " << c.input_dim << "\nhidden1 " << c.hidden1 << "\nhidden2 " << c.hidden2
     << "\nlearning_rate " << hex(c.learning_rate) << "\nepochs " << c.epochs << "\nbatch_size "
     << c.batch_size << "\nseed " << c.seed << "\nbinary_inputs " << (c.binary_inputs ? 1 : 0)
     << "\nbin_threshold " << hex(c.bin_threshold) << "\n";
  for (const Layer* l : {&m.l1, &m.l2, &m.l3}) {
    os << "layer " << l->in << ' ' << l->out << "\n";
    for (std::size_t o = 0; o < l->out; ++o) {
      for (std::size_t i = 0; i < l->in; ++i) os << (i ? " " : "") << hex(l->w[o * l->in + i]);
      os << "\n";
    }
    for (std::size_t o = 0; o < l->out; ++o) os << (o ? " " : "") << hex(l->b[o]);
    os << "\n";
  }
  return os.str();
}

Mlp mlp_load(const std::string& text) {
  std::istringstream is(text);
  std::string magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != "driftwatch-mlp" || version != 1) {
    throw InputError("not a driftwatch model file");
  }
  auto read_double = [&](const char* what) {
    std::string tok;
    if (!(is >> tok)) throw InputError(std::string("model file truncated at ") + what);
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end) throw InputError(std::string("bad number in model at ") + what);
    return v;
  };
  auto expect = [&](const char* key) {
    std::string k;
    if (!(is >> k) || k != key) throw InputError(std::string("model file missing ") + key);
  };
  MlpConfig c;
  std::uint64_t seed = 0;
  int binary = 0;
  expect("input_dim"); is >> c.input_dim;
  expect("hidden1"); is >> c.hidden1;
  expect("hidden2"); is >> c.hidden2;
  expect("learning_rate"); c.learning_rate = read_double("learning_rate");
  expect("epochs"); is >> c.epochs;
  expect("batch_size"); is >> c.batch_size;
  expect("seed"); is >> seed;
  expect("binary_inputs"); is >> binary;
  expect("bin_threshold"); c.bin_threshold = read_double("bin_threshold");
  if (!is) throw InputError("model file header is malformed");
  c.seed = seed;
  c.binary_inputs = binary != 0;
  Mlp m = mlp_init(c, 0.0);
  for (Layer* l : {&m.l1, &m.l2, &m.l3}) {
    std::size_t in = 0, out = 0;
    expect("layer");
    is >> in >> out;
    if (!is || in != l->in || out != l->out) throw InputError("model layer shape mismatch");
    for (auto& w : l->w) w = read_double("weights");
    for (auto& b : l->b) b = read_double("biases");
  }
  return m;
}

std::string dataset_to_csv(const LabeledDataset& data) {
  std::ostringstream os;
  const std::size_t d = data.inputs.empty() ? 0 : data.inputs.front().size();
  for (std::size_t j = 0; j < d; ++j) os << "score_" << j << ',';
  os << "label\n";
  char buf[64];
  for (std::size_t r = 0; r < data.size(); ++r) {
    for (double v : data.inputs[r]) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      os << buf << ',';
    }
    os << data.labels[r] << '\n';
  }
  return os.str();
}

LabeledDataset dataset_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw InputError("training CSV is empty");
  const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (columns < 2 || line.substr(line.rfind(',') + 1) != "label") {
    throw InputError("training CSV header must be score_0,...,label");
  }
  LabeledDataset data;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || *end) {
        throw InputError("training CSV line " + std::to_string(lineno) + ": bad number");
      }
      row.push_back(v);
    }
    if (row.size() != columns) {
      throw InputError("training CSV line " + std::to_string(lineno) + ": wrong column count");
    }
    if (row.back() != 0.0 && row.back() != 1.0) {
      throw InputError("training CSV line " + std::to_string(lineno) + ": label must be 0 or 1");
    }
    data.labels.push_back(static_cast<int>(row.back()));
    row.pop_back();
    data.inputs.push_back(std::move(row));
  }
  data.validate(columns - 1);
  return data;
}

}  // namespace driftwatch
