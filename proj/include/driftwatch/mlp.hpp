#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace driftwatch {

struct MlpConfig {
  std::size_t input_dim = 1;
  std::size_t hidden1 = 16;
  std::size_t hidden2 = 8;
  double learning_rate = 1e-3;
  std::size_t epochs = 120;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  // Feed binarized scores (score > bin_threshold) instead of the scores.
  bool binary_inputs = false;
  double bin_threshold = 0.65;

  void validate() const;
};

/// Dense row-major layer: w[o * in + i].
struct Layer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> w;
  std::vector<double> b;

  bool operator==(const Layer&) const = default;
};

struct Mlp {
  MlpConfig cfg;
  // input -> hidden1 (ReLU) -> hidden2 (ReLU) -> 1 (logistic)
  Layer l1, l2, l3;

  bool operator==(const Mlp& o) const { return l1 == o.l1 && l2 == o.l2 && l3 == o.l3; }
};

struct LabeledDataset {
  std::vector<std::vector<double>> inputs;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  void validate(std::size_t input_dim) const;
};

struct MlpGradients {
  Layer l1, l2, l3;
};

/// Uniform(-s, s) weights with s = sqrt(6 / fan_in), zero biases. `scale`
/// multiplies s; 0 gives an all-zero network.
Mlp mlp_init(const MlpConfig& cfg, double scale = 1.0);

double mlp_forward(const Mlp& m, std::span<const double> x);

/// Mean binary cross-entropy over the rows `rows` of `data`.
double mlp_loss(const Mlp& m, const LabeledDataset& data, std::span<const std::size_t> rows);
double mlp_loss(const Mlp& m, const LabeledDataset& data);

/// Exact gradients of the mean binary cross-entropy over `rows`.
MlpGradients mlp_gradients(const Mlp& m, const LabeledDataset& data,
                           std::span<const std::size_t> rows);
MlpGradients mlp_gradients(const Mlp& m, const LabeledDataset& data);

/// Adam over shuffled mini-batches for cfg.epochs epochs. Returns the mean
/// loss of each epoch's batches.
std::vector<double> mlp_train(Mlp& m, const LabeledDataset& data);

bool combine_detect(std::span<const double> scores, const Mlp& m, double threshold = 0.5);

/// Applies the binary-input transform when the config asks for it.
std::vector<double> prepare_inputs(const MlpConfig& cfg, std::span<const double> scores);

/// Smallest threshold among the forward outputs of the negatives whose false
/// positive rate (forward > threshold) does not exceed max_fpr.
double threshold_for_fpr(const Mlp& m, const LabeledDataset& data, double max_fpr);

struct BinaryMetrics {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double recall() const { return tp + fn ? double(tp) / double(tp + fn) : 0.0; }
  double fpr() const { return fp + tn ? double(fp) / double(fp + tn) : 0.0; }
  double accuracy() const {
    const auto n = tp + fp + tn + fn;
    return n ? double(tp + tn) / double(n) : 0.0;
  }
};

BinaryMetrics evaluate(const Mlp& m, const LabeledDataset& data, double threshold);

/// Text model: header line, config keys, then each layer's shape and
/// row-major weights and biases in hexfloat.
std::string mlp_save(const Mlp& m);
Mlp mlp_load(const std::string& text);

/// CSV with header score_0,...,score_{d-1},label.
std::string dataset_to_csv(const LabeledDataset& data);
LabeledDataset dataset_from_csv(const std::string& text);

}  // namespace driftwatch
