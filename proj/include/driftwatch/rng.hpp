#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace driftwatch {

/// Seeded generator shared by every stochastic component.
///
/// The bit stream is std::mt19937_64, whose output sequence is fixed by the
/// standard. Uniform and Gaussian variates are derived here rather than via
/// <random> distributions, whose algorithms are implementation-defined, so a
/// seed produces the same stream on every conforming platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1) with 53 bits of resolution.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n) by rejection, n > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();

  double normal(double mean, double sd) { return mean + sd * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

  bool operator==(const Rng&) const = default;

  /// Engine state plus the cached Gaussian spare, as text.
  std::string save() const;
  void restore(const std::string& text);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace driftwatch
