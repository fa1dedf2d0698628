#include "driftwatch/sdr.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "driftwatch/errors.hpp"

namespace driftwatch {

Sdr::Sdr(std::size_t width, std::vector<std::uint32_t> active)
    : width_(width), active_(std::move(active)) {
  std::sort(active_.begin(), active_.end());
  active_.erase(std::unique(active_.begin(), active_.end()), active_.end());
  if (!active_.empty() && active_.back() >= width_) {
    throw InputError("SDR index " + std::to_string(active_.back()) +
                     " out of range for width " + std::to_string(width_));
  }
}

bool Sdr::contains(std::uint32_t index) const {
  return std::binary_search(active_.begin(), active_.end(), index);
}

std::vector<std::uint64_t> Sdr::words() const {
  std::vector<std::uint64_t> out(word_count(width_), 0);
  for (auto i : active_) out[i / 64] |= std::uint64_t{1} << (i % 64);
  return out;
}

std::size_t overlap(const Sdr& a, const Sdr& b) {
  if (a.width() != b.width()) {
    throw InputError("SDR width mismatch: " + std::to_string(a.width()) +
                     " vs " + std::to_string(b.width()));
  }
  std::size_t count = 0;
  auto ia = a.active().begin();
  auto ib = b.active().begin();
  while (ia != a.active().end() && ib != b.active().end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++count;
      ++ia;
      ++ib;
    }
  }
  return count;
}

std::size_t masked_popcount(std::span<const std::uint64_t> a,
                            std::span<const std::uint64_t> b) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.size(); ++i) count += std::popcount(a[i] & b[i]);
  return count;
}

}  // namespace driftwatch
