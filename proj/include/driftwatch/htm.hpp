#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "driftwatch/encoder.hpp"
#include "driftwatch/sdr.hpp"
#include "driftwatch/serialize.hpp"
#include "driftwatch/spatial_pooler.hpp"
#include "driftwatch/temporal_memory.hpp"

namespace driftwatch {

/// Which bucket the decoder reports when several share the best overlap.
enum class DecodeTies : std::uint8_t {
  kLowest = 0,
  // Middle of the tied buckets (lower middle for an even count).
  kMiddle = 1,
};

struct HtmConfig {
  EncoderConfig encoder;
  PoolerConfig pooler;
  TemporalConfig temporal;
  DecodeTies decode_ties = DecodeTies::kMiddle;

  void validate() const;
  bool operator==(const HtmConfig&) const = default;
};

struct HtmOutput {
  /// Fraction of this step's active columns that were not predicted.
  double raw_score = 1.0;
  /// Decoded one-step-ahead prediction, in input units.
  double predicted_value = 0.0;
};

/// 1 - |predicted_prev ∩ active_now| / |active_now|.
/// Throws InputError when active_now is empty or widths differ.
double raw_anomaly_score(const Sdr& predicted_prev, const Sdr& active_now);

/// One dimension's HTM: encoder -> spatial pooler -> temporal memory, plus
/// raw anomaly scoring and decoding of the predicted next value.
class HtmModel {
 public:
  explicit HtmModel(const HtmConfig& cfg);

  /// Learns from `value` and predicts the next one.
  HtmOutput step(double value);

  /// Value of the encoder bucket whose pooled columns best overlap
  /// `predicted_columns`, ties resolved per DecodeTies. With nothing predicted, or
  /// nothing overlapping, falls back to the last observed value.
  double decode_prediction(const Sdr& predicted_columns);

  const HtmConfig& config() const { return cfg_; }
  const ScalarEncoder& encoder() const { return encoder_; }
  SpatialPooler& pooler() { return pooler_; }
  const SpatialPooler& pooler() const { return pooler_; }
  TemporalMemory& temporal() { return temporal_; }
  const TemporalMemory& temporal() const { return temporal_; }
  const Sdr& predicted_columns() const { return predicted_; }
  std::uint64_t step_count() const { return steps_; }
  double last_value() const { return last_value_; }

  /// Pooled columns of every encoder bucket, as the decoder sees them now.
  const Sdr& bucket_columns(std::size_t bucket);

  std::string serialize() const;
  static HtmModel deserialize(const std::string& bytes);
  void save(BinaryWriter& out) const;
  static HtmModel load(BinaryReader& in);

  /// Compares learned and sequence state; the decode cache is derived data.
  bool operator==(const HtmModel& o) const;

 private:
  HtmModel(const HtmConfig& cfg, SpatialPooler sp, TemporalMemory tm);
  void build_cache();
  void apply_changes(const std::vector<ConnectivityChange>& changes);
  void refresh_bucket(std::size_t bucket);

  HtmConfig cfg_;
  ScalarEncoder encoder_;
  SpatialPooler pooler_;
  TemporalMemory temporal_;
  Sdr predicted_;
  std::uint64_t steps_ = 0;
  double last_value_ = 0.0;

  // Decode cache: bucket-major overlap counts of every column against every
  // bucket's input bits, and the resulting winner set per bucket.
  bool cache_built_ = false;
  std::vector<std::uint32_t> bucket_overlaps_;
  std::vector<Sdr> bucket_columns_;
  std::vector<std::vector<std::uint64_t>> bucket_words_;
  std::vector<char> bucket_dirty_;
};

}  // namespace driftwatch
