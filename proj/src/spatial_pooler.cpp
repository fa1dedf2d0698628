#include "driftwatch/spatial_pooler.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "driftwatch/errors.hpp"
#include "driftwatch/rng.hpp"

namespace driftwatch {

void PoolerConfig::validate() const {
  if (n_columns == 0 || n_active_columns == 0 || n_active_columns >= n_columns) {
    throw ConfigError("pooler requires 0 < n_active_columns < n_columns");
  }
  if (!(potential_fraction > 0.0 && potential_fraction <= 1.0)) {
    throw ConfigError("pooler potential_fraction must lie in (0, 1]");
  }
  if (!(permanence_connected > 0.0 && permanence_connected < 1.0)) {
    throw ConfigError("pooler permanence_connected must lie in (0, 1)");
  }
  if (!(permanence_inc > 0.0) || !(permanence_dec > 0.0)) {
    throw ConfigError("pooler permanence_inc and permanence_dec must be positive");
  }
}

SpatialPooler::SpatialPooler(std::size_t n_inputs, const PoolerConfig& cfg)
    : n_inputs_(n_inputs), cfg_(cfg) {
  cfg_.validate();
  if (n_inputs == 0) throw ConfigError("pooler input width must be positive");
  words_ = word_count(n_inputs_);
  const auto pool_size = std::max<std::size_t>(
      1, static_cast<std::size_t>(cfg_.potential_fraction * static_cast<double>(n_inputs_)));

  Rng rng(cfg_.seed);
  std::vector<std::uint32_t> bits(n_inputs_);
  pools_.resize(cfg_.n_columns);
  perms_.resize(cfg_.n_columns);
  connected_.assign(cfg_.n_columns * words_, 0);
  const double spread = 0.1;
  for (std::size_t c = 0; c < cfg_.n_columns; ++c) {
    std::iota(bits.begin(), bits.end(), 0u);
    for (std::size_t i = 0; i < pool_size; ++i) {
      const auto j = i + rng.below(n_inputs_ - i);
      std::swap(bits[i], bits[j]);
    }
    pools_[c].assign(bits.begin(), bits.begin() + static_cast<std::ptrdiff_t>(pool_size));
    std::sort(pools_[c].begin(), pools_[c].end());
    perms_[c].resize(pool_size);
    for (auto& p : perms_[c]) {
      p = static_cast<float>(std::clamp(
          rng.uniform(cfg_.permanence_connected - spread, cfg_.permanence_connected + spread),
          0.0, 1.0));
    }
    rebuild_connected(c);
  }
}

void SpatialPooler::rebuild_connected(std::size_t column) {
  auto* mask = connected_.data() + column * words_;
  std::fill(mask, mask + words_, 0);
  const auto threshold = static_cast<float>(cfg_.permanence_connected);
  for (std::size_t i = 0; i < pools_[column].size(); ++i) {
    if (perms_[column][i] >= threshold) {
      const auto bit = pools_[column][i];
      mask[bit / 64] |= std::uint64_t{1} << (bit % 64);
    }
  }
}

bool SpatialPooler::connected(std::size_t column, std::uint32_t input_bit) const {
  return (connected_[column * words_ + input_bit / 64] >> (input_bit % 64)) & 1u;
}

std::vector<std::uint32_t> SpatialPooler::overlaps(const Sdr& input) const {
  if (input.width() != n_inputs_) {
    throw InputError("pooler input width " + std::to_string(input.width()) + " != " +
                     std::to_string(n_inputs_));
  }
  const auto mask = input.words();
  std::vector<std::uint32_t> out(cfg_.n_columns);
  for (std::size_t c = 0; c < cfg_.n_columns; ++c) {
    out[c] = static_cast<std::uint32_t>(masked_popcount(
        std::span<const std::uint64_t>(connected_.data() + c * words_, words_), mask));
  }
  return out;
}

std::vector<std::uint32_t> top_k_by_score(std::span<const std::uint32_t> scores,
                                          std::size_t k) {
  k = std::min(k, scores.size());
  if (k == 0) return {};
  const auto max_score = *std::max_element(scores.begin(), scores.end());
  std::vector<std::size_t> histogram(max_score + 1, 0);
  for (auto s : scores) ++histogram[s];
  // Lowest score that still makes the cut, and how many at that score fit.
  std::size_t taken = 0;
  std::uint32_t cutoff = max_score;
  for (std::size_t s = max_score + 1; s-- > 0;) {
    if (taken + histogram[s] >= k) {
      cutoff = static_cast<std::uint32_t>(s);
      break;
    }
    taken += histogram[s];
  }
  std::size_t at_cutoff = k - taken;
  std::vector<std::uint32_t> winners;
  winners.reserve(k);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] > cutoff) {
      winners.push_back(static_cast<std::uint32_t>(i));
    } else if (scores[i] == cutoff && at_cutoff > 0) {
      winners.push_back(static_cast<std::uint32_t>(i));
      --at_cutoff;
    }
  }
  return winners;
}

Sdr SpatialPooler::compute(const Sdr& input, bool learn,
                           std::vector<ConnectivityChange>* changes) {
  auto winners = top_k_by_score(overlaps(input), cfg_.n_active_columns);
  if (learn) {
    const auto inc = static_cast<float>(cfg_.permanence_inc);
    const auto dec = static_cast<float>(cfg_.permanence_dec);
    const auto threshold = static_cast<float>(cfg_.permanence_connected);
    for (auto c : winners) {
      auto& perms = perms_[c];
      const auto& pool = pools_[c];
      bool crossed = false;
      for (std::size_t i = 0; i < pool.size(); ++i) {
        const bool was = perms[i] >= threshold;
        if (input.contains(pool[i])) {
          perms[i] = std::min(1.0f, perms[i] + inc);
        } else {
          perms[i] = std::max(0.0f, perms[i] - dec);
        }
        const bool now = perms[i] >= threshold;
        if (was != now) {
          crossed = true;
          if (changes) changes->push_back({c, pool[i], now});
        }
      }
      if (crossed) rebuild_connected(c);
    }
  }
  return Sdr(cfg_.n_columns, std::move(winners));
}

void SpatialPooler::set_permanences(std::size_t column, std::vector<float> perms) {
  if (column >= cfg_.n_columns || perms.size() != pools_[column].size()) {
    throw InputError("permanence vector does not match the column's potential pool");
  }
  perms_[column] = std::move(perms);
  rebuild_connected(column);
}

void SpatialPooler::save(BinaryWriter& out) const {
  out.put_string("pooler");
  out.put<std::uint64_t>(n_inputs_);
  out.put<std::uint64_t>(cfg_.n_columns);
  out.put<std::uint64_t>(cfg_.n_active_columns);
  out.put(cfg_.potential_fraction);
  out.put(cfg_.permanence_connected);
  out.put(cfg_.permanence_inc);
  out.put(cfg_.permanence_dec);
  out.put(cfg_.seed);
  for (std::size_t c = 0; c < cfg_.n_columns; ++c) {
    out.put_vector(pools_[c]);
    out.put_vector(perms_[c]);
  }
}

SpatialPooler SpatialPooler::load(BinaryReader& in) {
  in.expect_tag("pooler");
  SpatialPooler sp;
  sp.n_inputs_ = in.get<std::uint64_t>();
  sp.cfg_.n_columns = in.get<std::uint64_t>();
  sp.cfg_.n_active_columns = in.get<std::uint64_t>();
  sp.cfg_.potential_fraction = in.get<double>();
  sp.cfg_.permanence_connected = in.get<double>();
  sp.cfg_.permanence_inc = in.get<double>();
  sp.cfg_.permanence_dec = in.get<double>();
  sp.cfg_.seed = in.get<std::uint64_t>();
  sp.cfg_.validate();
  sp.words_ = word_count(sp.n_inputs_);
  sp.pools_.resize(sp.cfg_.n_columns);
  sp.perms_.resize(sp.cfg_.n_columns);
  sp.connected_.assign(sp.cfg_.n_columns * sp.words_, 0);
  for (std::size_t c = 0; c < sp.cfg_.n_columns; ++c) {
    sp.pools_[c] = in.get_vector<std::uint32_t>();
    sp.perms_[c] = in.get_vector<float>();
    if (sp.pools_[c].size() != sp.perms_[c].size()) throw InputError("corrupt pooler snapshot");
    for (auto bit : sp.pools_[c]) {
      if (bit >= sp.n_inputs_) throw InputError("corrupt pooler snapshot");
    }
    sp.rebuild_connected(c);
  }
  return sp;
}

}  // namespace driftwatch
