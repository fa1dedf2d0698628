#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "driftwatch/sdr.hpp"
#include "driftwatch/serialize.hpp"

namespace driftwatch {

struct PoolerConfig {
  std::size_t n_columns = 1024;
  std::size_t n_active_columns = 20;
  double potential_fraction = 0.5;
  double permanence_connected = 0.5;
  double permanence_inc = 0.05;
  double permanence_dec = 0.01;
  std::uint64_t seed = 42;

  void validate() const;
  bool operator==(const PoolerConfig&) const = default;
};

/// A synapse that crossed the connection threshold during learning.
struct ConnectivityChange {
  std::uint32_t column;
  std::uint32_t input_bit;
  bool connected;
};

/// Spatial pooler with global inhibition.
///
/// Each column owns a fixed potential pool of input bits sampled from the seed.
/// Overlap is the number of connected potential synapses on active input bits;
/// the n_active_columns columns with the highest overlap win, lower column
/// index first on ties.
class SpatialPooler {
 public:
  SpatialPooler(std::size_t n_inputs, const PoolerConfig& cfg);

  const PoolerConfig& config() const { return cfg_; }
  std::size_t input_width() const { return n_inputs_; }
  std::size_t column_count() const { return cfg_.n_columns; }

  /// Winner columns for `input`. With learn set, winners' synapses on active
  /// input bits gain permanence_inc and those on inactive bits lose
  /// permanence_dec. Threshold crossings are appended to `changes` when given.
  Sdr compute(const Sdr& input, bool learn,
              std::vector<ConnectivityChange>* changes = nullptr);

  std::vector<std::uint32_t> overlaps(const Sdr& input) const;

  const std::vector<std::uint32_t>& potential_pool(std::size_t column) const {
    return pools_[column];
  }
  const std::vector<float>& permanences(std::size_t column) const { return perms_[column]; }
  bool connected(std::size_t column, std::uint32_t input_bit) const;

  /// Test hook: overwrite one column's permanences (same length as its pool).
  void set_permanences(std::size_t column, std::vector<float> perms);

  void save(BinaryWriter& out) const;
  static SpatialPooler load(BinaryReader& in);

  bool operator==(const SpatialPooler&) const = default;

 private:
  SpatialPooler() = default;
  void rebuild_connected(std::size_t column);

  std::size_t n_inputs_ = 0;
  PoolerConfig cfg_;
  std::vector<std::vector<std::uint32_t>> pools_;
  std::vector<std::vector<float>> perms_;
  // Per column bitmask over input bits of connected synapses.
  std::vector<std::uint64_t> connected_;
  std::size_t words_ = 0;
};

/// Indices of the `k` largest scores, lowest index first among equals,
/// returned sorted ascending. Scores are small non-negative integers.
std::vector<std::uint32_t> top_k_by_score(std::span<const std::uint32_t> scores,
                                          std::size_t k);

}  // namespace driftwatch
