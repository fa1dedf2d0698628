#include "driftwatch/temporal_memory.hpp"

#include <algorithm>
#include <string>

#include "driftwatch/errors.hpp"

namespace driftwatch {

namespace {

bool in_unit_interval(double x) { return x > 0.0 && x < 1.0; }

}  // namespace

void TemporalConfig::validate() const {
  if (cells_per_column == 0) throw ConfigError("cells_per_column must be positive");
  if (segment_activation_threshold == 0) {
    throw ConfigError("segment_activation_threshold must be positive");
  }
  if (max_synapses_per_segment == 0 || segment_activation_threshold > max_synapses_per_segment) {
    throw ConfigError("segment_activation_threshold must not exceed max_synapses_per_segment");
  }
  if (max_segments_per_cell == 0) throw ConfigError("max_segments_per_cell must be positive");
  if (!in_unit_interval(initial_permanence) || !in_unit_interval(permanence_connected) ||
      !in_unit_interval(permanence_inc) || !in_unit_interval(permanence_dec)) {
    throw ConfigError("temporal memory permanence parameters must lie in (0, 1)");
  }
}

TemporalMemory::TemporalMemory(std::size_t n_columns, const TemporalConfig& cfg)
    : n_columns_(n_columns), cfg_(cfg), rng_(cfg.seed) {
  cfg_.validate();
  if (n_columns_ == 0) throw ConfigError("temporal memory needs at least one column");
  cell_segments_.resize(cell_count());
  presynaptic_index_.resize(cell_count());
}

TemporalMemory::Activation TemporalMemory::activate(const Sdr& active_columns) const {
  if (active_columns.width() != n_columns_) {
    throw InputError("temporal memory input width " + std::to_string(active_columns.width()) +
                     " != " + std::to_string(n_columns_));
  }
  const auto per_column = static_cast<std::uint32_t>(cfg_.cells_per_column);
  Activation act;
  auto predicted = predictive_cells_.begin();
  for (auto column : active_columns.active()) {
    const std::uint32_t first = column * per_column;
    const std::uint32_t last = first + per_column;
    predicted = std::lower_bound(predicted, predictive_cells_.end(), first);
    auto end = std::lower_bound(predicted, predictive_cells_.end(), last);
    if (predicted != end) {
      for (auto it = predicted; it != end; ++it) {
        act.active_cells.push_back(*it);
        act.winner_cells.push_back(*it);
        act.correctly_predicted_cells.push_back(*it);
      }
    } else {
      for (auto cell = first; cell < last; ++cell) act.active_cells.push_back(cell);
      const auto winner = least_used_cell(column);
      act.winner_cells.push_back(winner);
      act.learning_cells.push_back(winner);
    }
    predicted = end;
  }
  return act;
}

std::vector<std::uint32_t> TemporalMemory::active_segments_for(
    const std::vector<std::uint32_t>& active_cells) const {
  const auto threshold = static_cast<float>(cfg_.permanence_connected);
  std::vector<std::uint32_t> counts(segments_.size(), 0);
  std::vector<std::uint32_t> touched;
  for (auto cell : active_cells) {
    for (const auto& ref : presynaptic_index_[cell]) {
      if (segments_[ref.segment].synapses[ref.slot].permanence >= threshold) {
        if (counts[ref.segment]++ == 0) touched.push_back(ref.segment);
      }
    }
  }
  std::vector<std::uint32_t> active;
  for (auto seg : touched) {
    if (counts[seg] >= cfg_.segment_activation_threshold) active.push_back(seg);
  }
  std::sort(active.begin(), active.end());
  return active;
}

std::vector<std::uint32_t> TemporalMemory::cells_of(
    const std::vector<std::uint32_t>& segments) const {
  std::vector<std::uint32_t> cells;
  cells.reserve(segments.size());
  for (auto seg : segments) cells.push_back(segments_[seg].cell);
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  return cells;
}

Sdr TemporalMemory::columns_of(const std::vector<std::uint32_t>& cells) const {
  std::vector<std::uint32_t> columns;
  columns.reserve(cells.size());
  for (auto cell : cells) columns.push_back(cell / static_cast<std::uint32_t>(cfg_.cells_per_column));
  return Sdr(n_columns_, std::move(columns));
}

std::uint32_t TemporalMemory::least_used_cell(std::uint32_t column) const {
  const auto first = column * static_cast<std::uint32_t>(cfg_.cells_per_column);
  auto best = first;
  for (auto cell = first + 1; cell < first + cfg_.cells_per_column; ++cell) {
    if (cell_segments_[cell].size() < cell_segments_[best].size()) best = cell;
  }
  return best;
}

void TemporalMemory::reinforce(Segment& segment, const std::vector<char>& previously_active) {
  const auto inc = static_cast<float>(cfg_.permanence_inc);
  const auto dec = static_cast<float>(cfg_.permanence_dec);
  for (auto& syn : segment.synapses) {
    if (previously_active[syn.presynaptic_cell]) {
      syn.permanence = std::min(1.0f, syn.permanence + inc);
    } else {
      syn.permanence = std::max(0.0f, syn.permanence - dec);
    }
  }
}

void TemporalMemory::index_segment(std::uint32_t segment) {
  const auto& syns = segments_[segment].synapses;
  for (std::uint32_t slot = 0; slot < syns.size(); ++slot) {
    presynaptic_index_[syns[slot].presynaptic_cell].push_back({segment, slot});
  }
}

void TemporalMemory::unindex_segment(std::uint32_t segment) {
  for (const auto& syn : segments_[segment].synapses) {
    auto& refs = presynaptic_index_[syn.presynaptic_cell];
    std::erase_if(refs, [segment](const SynapseRef& r) { return r.segment == segment; });
  }
}

void TemporalMemory::rebuild_index() {
  presynaptic_index_.assign(cell_count(), {});
  for (std::uint32_t seg = 0; seg < segments_.size(); ++seg) index_segment(seg);
}

std::uint32_t TemporalMemory::create_segment(std::uint32_t cell) {
  auto& owned = cell_segments_[cell];
  std::uint32_t id;
  if (owned.size() < cfg_.max_segments_per_cell) {
    id = static_cast<std::uint32_t>(segments_.size());
    segments_.push_back({});
    owned.push_back(id);
  } else {
    id = *std::min_element(owned.begin(), owned.end(), [this](auto a, auto b) {
      return segments_[a].last_used < segments_[b].last_used ||
             (segments_[a].last_used == segments_[b].last_used && a < b);
    });
    unindex_segment(id);
  }
  segments_[id] = Segment{cell, step_, {}};
  return id;
}

std::uint32_t TemporalMemory::add_segment(std::uint32_t cell, std::vector<Synapse> synapses) {
  if (cell >= cell_count()) throw InputError("cell index out of range");
  for (const auto& s : synapses) {
    if (s.presynaptic_cell >= cell_count()) throw InputError("presynaptic cell out of range");
  }
  const auto id = create_segment(cell);
  segments_[id].synapses = std::move(synapses);
  index_segment(id);
  predictive_cells_ = cells_of(active_segments_ = active_segments_for(active_cells_));
  return id;
}

Sdr TemporalMemory::compute(const Sdr& active_columns, bool learn) {
  auto act = activate(active_columns);
  if (!learn) return columns_of(cells_of(active_segments_for(act.active_cells)));

  ++step_;
  std::vector<char> previously_active(cell_count(), 0);
  for (auto cell : active_cells_) previously_active[cell] = 1;

  // Reinforce the segments that caused a correct prediction.
  for (auto seg : active_segments_) {
    auto& segment = segments_[seg];
    if (std::binary_search(act.correctly_predicted_cells.begin(),
                           act.correctly_predicted_cells.end(), segment.cell)) {
      reinforce(segment, previously_active);
      segment.last_used = step_;
    }
  }

  // Bursting columns grow a segment toward the previous winners.
  if (!winner_cells_.empty()) {
    for (auto cell : act.learning_cells) {
      std::vector<std::uint32_t> sources = winner_cells_;
      if (sources.size() > cfg_.max_synapses_per_segment) {
        for (std::size_t i = 0; i < cfg_.max_synapses_per_segment; ++i) {
          const auto j = i + rng_.below(sources.size() - i);
          std::swap(sources[i], sources[j]);
        }
        sources.resize(cfg_.max_synapses_per_segment);
        std::sort(sources.begin(), sources.end());
      }
      const auto id = create_segment(cell);
      auto& syns = segments_[id].synapses;
      syns.reserve(sources.size());
      for (auto src : sources) {
        syns.push_back({src, static_cast<float>(cfg_.initial_permanence)});
      }
      index_segment(id);
    }
  }

  active_cells_ = std::move(act.active_cells);
  winner_cells_ = std::move(act.winner_cells);
  active_segments_ = active_segments_for(active_cells_);
  predictive_cells_ = cells_of(active_segments_);
  return predicted_columns();
}

Sdr TemporalMemory::predicted_columns() const { return columns_of(predictive_cells_); }

bool TemporalMemory::operator==(const TemporalMemory& o) const {
  return n_columns_ == o.n_columns_ && cfg_ == o.cfg_ && rng_ == o.rng_ && step_ == o.step_ &&
         segments_ == o.segments_ && cell_segments_ == o.cell_segments_ &&
         active_cells_ == o.active_cells_ && winner_cells_ == o.winner_cells_ &&
         active_segments_ == o.active_segments_ && predictive_cells_ == o.predictive_cells_;
}

void TemporalMemory::save(BinaryWriter& out) const {
  out.put_string("temporal");
  out.put<std::uint64_t>(n_columns_);
  out.put<std::uint64_t>(cfg_.cells_per_column);
  out.put<std::uint64_t>(cfg_.segment_activation_threshold);
  out.put(cfg_.initial_permanence);
  out.put(cfg_.permanence_connected);
  out.put(cfg_.permanence_inc);
  out.put(cfg_.permanence_dec);
  out.put<std::uint64_t>(cfg_.max_synapses_per_segment);
  out.put<std::uint64_t>(cfg_.max_segments_per_cell);
  out.put(cfg_.seed);
  out.put_string(rng_.save());
  out.put(step_);
  out.put<std::uint64_t>(segments_.size());
  for (const auto& seg : segments_) {
    out.put(seg.cell);
    out.put(seg.last_used);
    out.put<std::uint64_t>(seg.synapses.size());
    for (const auto& syn : seg.synapses) {
      out.put(syn.presynaptic_cell);
      out.put(syn.permanence);
    }
  }
  for (const auto& owned : cell_segments_) out.put_vector(owned);
  out.put_vector(active_cells_);
  out.put_vector(winner_cells_);
  out.put_vector(active_segments_);
  out.put_vector(predictive_cells_);
}

TemporalMemory TemporalMemory::load(BinaryReader& in) {
  in.expect_tag("temporal");
  TemporalMemory tm;
  tm.n_columns_ = in.get<std::uint64_t>();
  tm.cfg_.cells_per_column = in.get<std::uint64_t>();
  tm.cfg_.segment_activation_threshold = in.get<std::uint64_t>();
  tm.cfg_.initial_permanence = in.get<double>();
  tm.cfg_.permanence_connected = in.get<double>();
  tm.cfg_.permanence_inc = in.get<double>();
  tm.cfg_.permanence_dec = in.get<double>();
  tm.cfg_.max_synapses_per_segment = in.get<std::uint64_t>();
  tm.cfg_.max_segments_per_cell = in.get<std::uint64_t>();
  tm.cfg_.seed = in.get<std::uint64_t>();
  tm.cfg_.validate();
  tm.rng_.restore(in.get_string());
  tm.step_ = in.get<std::uint64_t>();
  const auto cells = tm.cell_count();
  tm.segments_.resize(in.get<std::uint64_t>());
  for (auto& seg : tm.segments_) {
    seg.cell = in.get<std::uint32_t>();
    seg.last_used = in.get<std::uint64_t>();
    seg.synapses.resize(in.get<std::uint64_t>());
    for (auto& syn : seg.synapses) {
      syn.presynaptic_cell = in.get<std::uint32_t>();
      syn.permanence = in.get<float>();
      if (syn.presynaptic_cell >= cells) throw InputError("corrupt temporal snapshot");
    }
    if (seg.cell >= cells) throw InputError("corrupt temporal snapshot");
  }
  tm.cell_segments_.resize(cells);
  for (auto& owned : tm.cell_segments_) owned = in.get_vector<std::uint32_t>();
  tm.active_cells_ = in.get_vector<std::uint32_t>();
  tm.winner_cells_ = in.get_vector<std::uint32_t>();
  tm.active_segments_ = in.get_vector<std::uint32_t>();
  tm.predictive_cells_ = in.get_vector<std::uint32_t>();
  tm.rebuild_index();
  return tm;
}

}  // namespace driftwatch
