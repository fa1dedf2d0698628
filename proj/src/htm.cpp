#include "driftwatch/htm.hpp"

#include <algorithm>
#include <string>

#include "driftwatch/errors.hpp"

namespace driftwatch {

namespace {
constexpr std::uint32_t kSnapshotVersion = 1;
}

void HtmConfig::validate() const {
  encoder.validate();
  pooler.validate();
  temporal.validate();
}

double raw_anomaly_score(const Sdr& predicted_prev, const Sdr& active_now) {
  if (active_now.empty()) throw InputError("anomaly score needs at least one active column");
  const auto hit = overlap(predicted_prev, active_now);
  return 1.0 - static_cast<double>(hit) / static_cast<double>(active_now.size());
}

HtmModel::HtmModel(const HtmConfig& cfg)
    : cfg_(cfg),
      encoder_(cfg.encoder),
      pooler_(cfg.encoder.n_bits, cfg.pooler),
      temporal_(cfg.pooler.n_columns, cfg.temporal),
      predicted_(cfg.pooler.n_columns) {
  cfg_.validate();
}

HtmModel::HtmModel(const HtmConfig& cfg, SpatialPooler sp, TemporalMemory tm)
    : cfg_(cfg),
      encoder_(cfg.encoder),
      pooler_(std::move(sp)),
      temporal_(std::move(tm)),
      predicted_(cfg.pooler.n_columns) {}

HtmOutput HtmModel::step(double value) {
  const auto input = encoder_.encode(value);
  std::vector<ConnectivityChange> changes;
  const auto active = pooler_.compute(input, true, &changes);
  if (cache_built_) apply_changes(changes);
  HtmOutput out;
  out.raw_score = raw_anomaly_score(predicted_, active);
  predicted_ = temporal_.compute(active, true);
  last_value_ = value;
  ++steps_;
  out.predicted_value = decode_prediction(predicted_);
  return out;
}

void HtmModel::build_cache() {
  const auto buckets = encoder_.bucket_count();
  const auto columns = pooler_.column_count();
  const auto width = cfg_.encoder.active_bits;
  bucket_overlaps_.assign(buckets * columns, 0);
  std::vector<std::uint32_t> prefix(cfg_.encoder.n_bits + 1);
  for (std::size_t c = 0; c < columns; ++c) {
    for (std::size_t bit = 0; bit < cfg_.encoder.n_bits; ++bit) {
      prefix[bit + 1] = prefix[bit] + (pooler_.connected(c, static_cast<std::uint32_t>(bit)) ? 1 : 0);
    }
    for (std::size_t b = 0; b < buckets; ++b) {
      bucket_overlaps_[b * columns + c] = prefix[b + width] - prefix[b];
    }
  }
  bucket_columns_.assign(buckets, Sdr(columns));
  bucket_words_.assign(buckets, {});
  bucket_dirty_.assign(buckets, 1);
  cache_built_ = true;
}

void HtmModel::apply_changes(const std::vector<ConnectivityChange>& changes) {
  const auto buckets = encoder_.bucket_count();
  const auto columns = pooler_.column_count();
  const auto width = cfg_.encoder.active_bits;
  for (const auto& ch : changes) {
    // Buckets whose bit run [b, b + width) covers the changed input bit.
    const std::size_t lo = ch.input_bit + 1 >= width ? ch.input_bit + 1 - width : 0;
    const std::size_t hi = std::min<std::size_t>(ch.input_bit, buckets - 1);
    for (std::size_t b = lo; b <= hi; ++b) {
      auto& count = bucket_overlaps_[b * columns + ch.column];
      count = ch.connected ? count + 1 : count - 1;
      bucket_dirty_[b] = 1;
    }
  }
}

void HtmModel::refresh_bucket(std::size_t b) {
  const auto columns = pooler_.column_count();
  std::span<const std::uint32_t> row(bucket_overlaps_.data() + b * columns, columns);
  bucket_columns_[b] = Sdr(columns, top_k_by_score(row, cfg_.pooler.n_active_columns));
  bucket_words_[b] = bucket_columns_[b].words();
  bucket_dirty_[b] = 0;
}

const Sdr& HtmModel::bucket_columns(std::size_t bucket) {
  if (bucket >= encoder_.bucket_count()) throw InputError("bucket index out of range");
  if (!cache_built_) build_cache();
  if (bucket_dirty_[bucket]) refresh_bucket(bucket);
  return bucket_columns_[bucket];
}

double HtmModel::decode_prediction(const Sdr& predicted_columns) {
  if (predicted_columns.width() != pooler_.column_count()) {
    throw InputError("predicted columns width does not match the pooler");
  }
  if (predicted_columns.empty()) return last_value_;
  if (!cache_built_) build_cache();
  const auto mask = predicted_columns.words();
  std::vector<std::size_t> best;
  std::size_t best_overlap = 0;
  for (std::size_t b = 0; b < encoder_.bucket_count(); ++b) {
    if (bucket_dirty_[b]) refresh_bucket(b);
    const auto hit = masked_popcount(bucket_words_[b], mask);
    if (hit > best_overlap) {
      best_overlap = hit;
      best.clear();
    }
    if (hit == best_overlap) best.push_back(b);
  }
  if (best_overlap == 0) return last_value_;
  const auto pick = cfg_.decode_ties == DecodeTies::kMiddle ? best[(best.size() - 1) / 2]
                                                              : best.front();
  return encoder_.bucket_center(pick);
}

bool HtmModel::operator==(const HtmModel& o) const {
  return cfg_ == o.cfg_ && pooler_ == o.pooler_ && temporal_ == o.temporal_ &&
         predicted_ == o.predicted_ && steps_ == o.steps_ && last_value_ == o.last_value_;
}

void HtmModel::save(BinaryWriter& out) const {
  out.put_string("htm");
  out.put(kSnapshotVersion);
  out.put(cfg_.encoder.min_value);
  out.put(cfg_.encoder.max_value);
  out.put<std::uint64_t>(cfg_.encoder.n_bits);
  out.put<std::uint64_t>(cfg_.encoder.active_bits);
  out.put<std::uint8_t>(static_cast<std::uint8_t>(cfg_.decode_ties));
  pooler_.save(out);
  temporal_.save(out);
  out.put_vector(predicted_.active());
  out.put(steps_);
  out.put(last_value_);
}

HtmModel HtmModel::load(BinaryReader& in) {
  in.expect_tag("htm");
  if (in.get<std::uint32_t>() != kSnapshotVersion) throw InputError("unsupported HTM snapshot version");
  HtmConfig cfg;
  cfg.encoder.min_value = in.get<double>();
  cfg.encoder.max_value = in.get<double>();
  cfg.encoder.n_bits = in.get<std::uint64_t>();
  cfg.encoder.active_bits = in.get<std::uint64_t>();
  const auto ties = in.get<std::uint8_t>();
  if (ties > 1) throw InputError("corrupt HTM snapshot");
  cfg.decode_ties = static_cast<DecodeTies>(ties);
  auto sp = SpatialPooler::load(in);
  auto tm = TemporalMemory::load(in);
  cfg.pooler = sp.config();
  cfg.temporal = tm.config();
  cfg.validate();
  if (sp.input_width() != cfg.encoder.n_bits || tm.column_count() != sp.column_count()) {
    throw InputError("HTM snapshot layers do not fit together");
  }
  HtmModel model(cfg, std::move(sp), std::move(tm));
  model.predicted_ = Sdr(cfg.pooler.n_columns, in.get_vector<std::uint32_t>());
  model.steps_ = in.get<std::uint64_t>();
  model.last_value_ = in.get<double>();
  return model;
}

std::string HtmModel::serialize() const {
  BinaryWriter out;
  save(out);
  return out.take();
}

HtmModel HtmModel::deserialize(const std::string& bytes) {
  BinaryReader in(bytes);
  auto model = load(in);
  if (!in.at_end()) throw InputError("trailing bytes after HTM snapshot");
  return model;
}

}  // namespace driftwatch
