#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace driftwatch {

/// Fixed-width sparse bit set stored as a sorted list of active indices.
class Sdr {
 public:
  Sdr() = default;
  explicit Sdr(std::size_t width) : width_(width) {}

  /// Indices are sorted and deduplicated; any index >= width throws InputError.
  Sdr(std::size_t width, std::vector<std::uint32_t> active);

  std::size_t width() const { return width_; }
  std::size_t size() const { return active_.size(); }
  bool empty() const { return active_.empty(); }
  const std::vector<std::uint32_t>& active() const { return active_; }

  bool contains(std::uint32_t index) const;

  /// Bitmask of ceil(width / 64) words, bit i of word i / 64 set for active i.
  std::vector<std::uint64_t> words() const;

  bool operator==(const Sdr&) const = default;

 private:
  std::size_t width_ = 0;
  std::vector<std::uint32_t> active_;
};

/// |a ∩ b|. Widths must match.
std::size_t overlap(const Sdr& a, const Sdr& b);

inline std::size_t word_count(std::size_t bits) { return (bits + 63) / 64; }

/// Popcount of the AND of two equally sized bitmasks.
std::size_t masked_popcount(std::span<const std::uint64_t> a,
                            std::span<const std::uint64_t> b);

}  // namespace driftwatch
