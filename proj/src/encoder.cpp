#include "driftwatch/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "driftwatch/errors.hpp"

namespace driftwatch {

void EncoderConfig::validate() const {
  if (!std::isfinite(min_value) || !std::isfinite(max_value) || !(min_value < max_value)) {
    throw ConfigError("encoder range must satisfy min_value < max_value");
  }
  if (active_bits == 0 || active_bits >= n_bits) {
    throw ConfigError("encoder requires 0 < active_bits < n_bits");
  }
}

ScalarEncoder::ScalarEncoder(const EncoderConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

std::size_t ScalarEncoder::bucket(double value) const {
  if (!std::isfinite(value)) throw InputError("cannot encode a non-finite value");
  const double clamped = std::clamp(value, cfg_.min_value, cfg_.max_value);
  const auto buckets = bucket_count();
  const double scaled = (clamped - cfg_.min_value) / (cfg_.max_value - cfg_.min_value) *
                        static_cast<double>(buckets);
  return std::min(buckets - 1, static_cast<std::size_t>(std::floor(scaled)));
}

double ScalarEncoder::bucket_center(std::size_t b) const {
  const double step = (cfg_.max_value - cfg_.min_value) / static_cast<double>(bucket_count());
  return cfg_.min_value + (static_cast<double>(b) + 0.5) * step;
}

Sdr ScalarEncoder::encode(double value) const { return encode_bucket(bucket(value)); }

Sdr ScalarEncoder::encode_bucket(std::size_t b) const {
  if (b >= bucket_count()) throw InputError("bucket index out of range");
  std::vector<std::uint32_t> bits(cfg_.active_bits);
  std::iota(bits.begin(), bits.end(), static_cast<std::uint32_t>(b));
  return Sdr(cfg_.n_bits, std::move(bits));
}

}  // namespace driftwatch
