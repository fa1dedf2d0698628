#pragma once

#include <cstddef>

#include "driftwatch/sdr.hpp"

namespace driftwatch {

struct EncoderConfig {
  double min_value = 0.0;
  double max_value = 1.0;
  std::size_t n_bits = 400;
  std::size_t active_bits = 21;

  void validate() const;
  bool operator==(const EncoderConfig&) const = default;
};

/// Contiguous-bucket scalar encoder. Each value maps to one of
/// n_bits - active_bits + 1 buckets and activates the active_bits-long run of
/// bits starting at the bucket index, so nearby values share bits.
class ScalarEncoder {
 public:
  explicit ScalarEncoder(const EncoderConfig& cfg);

  const EncoderConfig& config() const { return cfg_; }
  std::size_t bucket_count() const { return cfg_.n_bits - cfg_.active_bits + 1; }

  /// Values outside [min, max] are clamped; non-finite values throw InputError.
  std::size_t bucket(double value) const;
  double bucket_center(std::size_t bucket) const;

  Sdr encode(double value) const;
  Sdr encode_bucket(std::size_t bucket) const;

 private:
  EncoderConfig cfg_;
};

}  // namespace driftwatch
