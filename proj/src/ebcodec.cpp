#include "fedzip/ebcodec.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <map>
#include <mutex>

#include <fmt/core.h>

namespace fedzip {

namespace {

struct Registry {
  std::mutex mu;
  std::map<std::uint8_t, std::shared_ptr<const LossyCodec>> codecs;

  Registry() {
    for (auto c : {detail::make_pq_codec(), detail::make_cbt_codec()})
      codecs[static_cast<std::uint8_t>(c->id())] = c;
  }
};

Registry& registry() {
  static Registry r;
  return r;
}

bool bitwise_constant(std::span<const float> values) {
  for (auto v : values)
    if (std::memcmp(&v, &values[0], sizeof(float)) != 0) return false;
  return true;
}

void require_codec(const LossyBlob& blob, CodecId expected) {
  if (blob.codec != expected)
    fail(Errc::InvalidArgument, fmt::format("blob was produced by codec '{}', expected '{}'",
                                            codec_name(blob.codec), codec_name(expected)));
}

}  // namespace

void validate(const ErrorBound& bound) {
  if (!std::isfinite(bound.epsilon) || bound.epsilon < 0.0)
    fail(Errc::InvalidBound, fmt::format("error bound must be finite and non-negative, got {}", bound.epsilon));
  if (bound.mode == BoundMode::relative && bound.epsilon > 1.0)
    fail(Errc::InvalidBound, fmt::format("relative error bound must be <= 1, got {}", bound.epsilon));
  if (bound.mode != BoundMode::relative && bound.mode != BoundMode::absolute)
    fail(Errc::InvalidBound, "unknown error bound mode");
}

void validate(const CodecSpec& spec) {
  validate(spec.bound);
  if (spec.block_size < 8) fail(Errc::InvalidArgument, "block_size must be >= 8");
  if (spec.quant_radius < 2) fail(Errc::InvalidArgument, "quant_radius must be >= 2");
  if (spec.quant_radius > (1u << 30)) fail(Errc::InvalidArgument, "quant_radius must be <= 2^30");
}

Bytes encode_blob(const LossyBlob& blob) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(blob.codec));
  w.f64(blob.eps_abs);
  w.u64(blob.element_count);
  w.f64(blob.value_min);
  w.f64(blob.value_max);
  w.u64(blob.payload.size());
  w.bytes(blob.payload);
  w.crc_from(0);
  return std::move(w).take();
}

LossyBlob decode_blob(ByteSpan frame) {
  if (frame.size() < 4) fail(Errc::CorruptPayload, "lossy blob too short");
  ByteReader r(frame.first(frame.size() - 4), Errc::CorruptPayload);
  LossyBlob blob;
  blob.codec = static_cast<CodecId>(r.u8());
  blob.eps_abs = r.f64();
  blob.element_count = r.u64();
  blob.value_min = r.f64();
  blob.value_max = r.f64();
  auto payload = r.bytes(r.u64());
  if (!r.at_end()) fail(Errc::CorruptPayload, "trailing bytes in lossy blob");
  if (ByteReader(frame.last(4)).u32() != crc32(frame.first(frame.size() - 4)))
    fail(Errc::ChecksumMismatch, "lossy blob CRC32 mismatch");
  blob.payload.assign(payload.begin(), payload.end());
  return blob;
}

double resolve_abs_bound(const ErrorBound& bound, std::span<const float> values) {
  validate(bound);
  if (values.empty()) fail(Errc::EmptyInput, "cannot resolve an error bound over an empty array");
  if (bound.mode == BoundMode::absolute) return bound.epsilon;
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return bound.epsilon * (static_cast<double>(*hi) - static_cast<double>(*lo));
}

void register_codec(std::shared_ptr<const LossyCodec> codec) {
  if (!codec) fail(Errc::InvalidArgument, "null codec");
  auto& r = registry();
  std::lock_guard lock(r.mu);
  auto id = static_cast<std::uint8_t>(codec->id());
  if (id == static_cast<std::uint8_t>(CodecId::predict_quantize) ||
      id == static_cast<std::uint8_t>(CodecId::const_block_truncate))
    fail(Errc::InvalidArgument, "codec ids 1 and 2 are reserved for the built-in codecs");
  if (!r.codecs.emplace(id, std::move(codec)).second)
    fail(Errc::InvalidArgument, fmt::format("a codec with id {} is already registered", static_cast<int>(id)));
}

const LossyCodec& codec_for(CodecId id) {
  auto& r = registry();
  std::lock_guard lock(r.mu);
  auto it = r.codecs.find(static_cast<std::uint8_t>(id));
  if (it == r.codecs.end())
    fail(Errc::UnknownCodec, fmt::format("no codec registered with id {}", static_cast<int>(id)));
  return *it->second;
}

CodecId codec_from_name(std::string_view name) {
  if (name == "pq") return CodecId::predict_quantize;
  if (name == "cbt") return CodecId::const_block_truncate;
  auto& r = registry();
  std::lock_guard lock(r.mu);
  for (const auto& [id, c] : r.codecs)
    if (c->name() == name) return static_cast<CodecId>(id);
  fail(Errc::UnknownCodec, fmt::format("unknown codec '{}'", name));
}

std::string codec_name(CodecId id) {
  auto& r = registry();
  std::lock_guard lock(r.mu);
  auto it = r.codecs.find(static_cast<std::uint8_t>(id));
  if (it == r.codecs.end()) return fmt::format("codec#{}", static_cast<int>(id));
  return std::string(it->second->name());
}

LossyBlob compress(std::span<const float> values, const CodecSpec& spec) {
  validate(spec);
  const auto& codec = codec_for(spec.codec);
  LossyBlob blob;
  blob.codec = spec.codec;
  blob.element_count = values.size();
  if (values.empty()) {
    blob.eps_abs = spec.bound.mode == BoundMode::absolute ? spec.bound.epsilon : 0.0;
    return blob;
  }
  for (auto v : values)
    if (!std::isfinite(v)) fail(Errc::NonFiniteInput, "lossy codecs accept finite values only");

  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  blob.value_min = *lo;
  blob.value_max = *hi;
  blob.eps_abs = resolve_abs_bound(spec.bound, values);

  ByteWriter w;
  if (bitwise_constant(values)) {
    w.u8(static_cast<std::uint8_t>(detail::PayloadMode::constant));
    w.f32(values[0]);
  } else if (blob.eps_abs == 0.0) {
    // No budget to spend: keep every value verbatim.
    w.u8(static_cast<std::uint8_t>(detail::PayloadMode::literal));
    for (auto v : values) w.f32(v);
  } else {
    w.u8(static_cast<std::uint8_t>(detail::PayloadMode::coded));
    w.bytes(codec.encode(values, blob.eps_abs, spec));
  }
  blob.payload = std::move(w).take();
  return blob;
}

std::vector<float> decompress(const LossyBlob& blob) {
  if (blob.element_count == 0) {
    if (!blob.payload.empty()) fail(Errc::CorruptPayload, "payload present for an empty blob");
    return {};
  }
  if (!std::isfinite(blob.eps_abs) || blob.eps_abs < 0.0)
    fail(Errc::CorruptPayload, "blob carries an invalid error bound");
  const auto& codec = codec_for(blob.codec);
  ByteReader r(blob.payload, Errc::CorruptPayload);
  auto n = static_cast<std::size_t>(blob.element_count);
  switch (static_cast<detail::PayloadMode>(r.u8())) {
    case detail::PayloadMode::constant: {
      auto v = r.f32();
      if (!r.at_end()) fail(Errc::CorruptPayload, "trailing bytes after constant payload");
      return std::vector<float>(n, v);
    }
    case detail::PayloadMode::literal: {
      if (r.remaining() != n * sizeof(float)) fail(Errc::CorruptPayload, "literal payload has the wrong length");
      std::vector<float> out(n);
      for (auto& v : out) v = r.f32();
      return out;
    }
    case detail::PayloadMode::coded: {
      auto out = codec.decode(r.bytes(r.remaining()), n, blob.eps_abs);
      if (out.size() != n) fail(Errc::CorruptPayload, "codec returned the wrong element count");
      return out;
    }
  }
  fail(Errc::CorruptPayload, "unknown payload mode");
}

LossyBlob compress_pq(std::span<const float> values, const CodecSpec& spec) {
  if (spec.codec != CodecId::predict_quantize) fail(Errc::InvalidArgument, "spec does not select the pq codec");
  return compress(values, spec);
}

std::vector<float> decompress_pq(const LossyBlob& blob) {
  require_codec(blob, CodecId::predict_quantize);
  return decompress(blob);
}

LossyBlob compress_cbt(std::span<const float> values, const CodecSpec& spec) {
  if (spec.codec != CodecId::const_block_truncate) fail(Errc::InvalidArgument, "spec does not select the cbt codec");
  return compress(values, spec);
}

std::vector<float> decompress_cbt(const LossyBlob& blob) {
  require_codec(blob, CodecId::const_block_truncate);
  return decompress(blob);
}

double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  auto mid = xs.size() / 2;
  std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
  double m = xs[mid];
  if (xs.size() % 2 == 0) {
    auto lower = *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid));
    m = 0.5 * (m + lower);
  }
  return m;
}

CodecBenchRecord bench_codec(std::span<const float> values, const CodecSpec& spec, int repetitions) {
  if (repetitions < 1) fail(Errc::InvalidArgument, "repetitions must be >= 1");
  using clock = std::chrono::steady_clock;
  std::vector<double> tc, td;
  Bytes frame;
  std::vector<float> restored;
  for (int i = 0; i < repetitions; ++i) {
    auto t0 = clock::now();
    frame = encode_blob(compress(values, spec));
    auto t1 = clock::now();
    restored = decompress(decode_blob(frame));
    auto t2 = clock::now();
    tc.push_back(std::chrono::duration<double>(t1 - t0).count());
    td.push_back(std::chrono::duration<double>(t2 - t1).count());
  }

  CodecBenchRecord rec;
  rec.codec = spec.codec;
  rec.epsilon = spec.bound.epsilon;
  rec.eps_abs = decode_blob(frame).eps_abs;
  rec.compress_seconds = median(tc);
  rec.decompress_seconds = median(td);
  rec.original_bytes = values.size() * sizeof(float);
  rec.compressed_bytes = frame.size();
  rec.ratio = static_cast<double>(rec.original_bytes) / static_cast<double>(rec.compressed_bytes);
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    double e = std::abs(static_cast<double>(values[i]) - static_cast<double>(restored[i]));
    rec.max_abs_error = std::max(rec.max_abs_error, e);
    sum += e;
  }
  rec.mean_abs_error = values.empty() ? 0.0 : sum / static_cast<double>(values.size());
  if (codec_for(spec.codec).honors_pointwise_bound() && rec.max_abs_error > rec.eps_abs)
    fail(Errc::CorruptPayload, fmt::format("codec '{}' violated its bound: max error {} > {}",
                                           codec_name(spec.codec), rec.max_abs_error, rec.eps_abs));
  return rec;
}

}  // namespace fedzip
