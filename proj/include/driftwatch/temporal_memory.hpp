#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "driftwatch/rng.hpp"
#include "driftwatch/sdr.hpp"
#include "driftwatch/serialize.hpp"

namespace driftwatch {

struct TemporalConfig {
  std::size_t cells_per_column = 8;
  std::size_t segment_activation_threshold = 13;
  double initial_permanence = 0.55;
  double permanence_connected = 0.5;
  double permanence_inc = 0.05;
  double permanence_dec = 0.01;
  std::size_t max_synapses_per_segment = 32;
  // Once a cell holds this many segments, its least recently used segment is
  // recycled for the next one.
  std::size_t max_segments_per_cell = 32;
  std::uint64_t seed = 42;

  void validate() const;
  bool operator==(const TemporalConfig&) const = default;
};

/// Sequence memory over the pooler's columns.
///
/// Each column holds cells_per_column cells; each cell owns distal segments
/// whose synapses point at cells that were winners one step earlier. A segment
/// is active when at least segment_activation_threshold of its connected
/// synapses come from currently active cells, and an active segment puts its
/// cell in the predictive state for the next step.
class TemporalMemory {
 public:
  struct Synapse {
    std::uint32_t presynaptic_cell;
    float permanence;
    bool operator==(const Synapse&) const = default;
  };

  struct Segment {
    std::uint32_t cell = 0;
    std::uint64_t last_used = 0;
    std::vector<Synapse> synapses;
    bool operator==(const Segment&) const = default;
  };

  TemporalMemory(std::size_t n_columns, const TemporalConfig& cfg);

  const TemporalConfig& config() const { return cfg_; }
  std::size_t column_count() const { return n_columns_; }
  std::size_t cell_count() const { return n_columns_ * cfg_.cells_per_column; }

  /// Activates cells for `active_columns` and returns the columns predicted
  /// for the next step. With learn unset the call is a pure query: nothing in
  /// the memory, including the sequence context, changes.
  Sdr compute(const Sdr& active_columns, bool learn);

  /// Columns currently predicted for the next input.
  Sdr predicted_columns() const;

  const std::vector<std::uint32_t>& active_cells() const { return active_cells_; }
  const std::vector<std::uint32_t>& winner_cells() const { return winner_cells_; }
  const std::vector<std::uint32_t>& predictive_cells() const { return predictive_cells_; }
  const std::vector<Segment>& segments() const { return segments_; }
  std::size_t segment_count(std::uint32_t cell) const { return cell_segments_[cell].size(); }

  /// Test hook: append a segment with the given synapses to `cell`.
  std::uint32_t add_segment(std::uint32_t cell, std::vector<Synapse> synapses);

  void save(BinaryWriter& out) const;
  static TemporalMemory load(BinaryReader& in);

  bool operator==(const TemporalMemory& other) const;

 private:
  struct SynapseRef {
    std::uint32_t segment;
    std::uint32_t slot;
  };

  struct Activation {
    std::vector<std::uint32_t> active_cells;
    std::vector<std::uint32_t> winner_cells;
    // One cell per bursting column, chosen to grow a new segment.
    std::vector<std::uint32_t> learning_cells;
    std::vector<std::uint32_t> correctly_predicted_cells;
  };

  TemporalMemory() = default;
  Activation activate(const Sdr& active_columns) const;
  std::vector<std::uint32_t> active_segments_for(
      const std::vector<std::uint32_t>& active_cells) const;
  std::vector<std::uint32_t> cells_of(const std::vector<std::uint32_t>& segments) const;
  Sdr columns_of(const std::vector<std::uint32_t>& cells) const;
  std::uint32_t least_used_cell(std::uint32_t column) const;
  void reinforce(Segment& segment, const std::vector<char>& previously_active);
  std::uint32_t create_segment(std::uint32_t cell);
  void index_segment(std::uint32_t segment);
  void unindex_segment(std::uint32_t segment);
  void rebuild_index();

  std::size_t n_columns_ = 0;
  TemporalConfig cfg_;
  Rng rng_;
  std::uint64_t step_ = 0;
  std::vector<Segment> segments_;
  std::vector<std::vector<std::uint32_t>> cell_segments_;
  std::vector<std::vector<SynapseRef>> presynaptic_index_;
  std::vector<std::uint32_t> active_cells_;
  std::vector<std::uint32_t> winner_cells_;
  std::vector<std::uint32_t> active_segments_;
  std::vector<std::uint32_t> predictive_cells_;
};

}  // namespace driftwatch
