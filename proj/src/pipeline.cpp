#include "fedzip/pipeline.hpp"

#include <chrono>
#include <cstring>

#include <fmt/core.h>

namespace fedzip {

namespace {

constexpr char kMagic[4] = {'F', 'S', 'Z', 'U'};

template <class F>
auto with_entry_context(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), fmt::format("entry '{}': {}", name, e.what()));
  }
}

CompressedEntry compress_entry(const TensorRecord& t, Route route, const CodecSpec& spec,
                               const LosslessSpec& lossless) {
  CompressedEntry e{t.name(), t.shape(), t.dtype(), route, {}};
  e.blob = with_entry_context(t.name(), [&] {
    if (route == Route::lossy) return encode_blob(compress(flatten(t), spec));
    return lossless_compress(t.payload(), lossless);
  });
  return e;
}

TensorRecord decompress_entry(const CompressedEntry& e) {
  return with_entry_context(e.name, [&] {
    if (e.route == Route::lossy) {
      if (e.dtype != DType::f32) fail(Errc::CorruptPayload, "lossy entry must be f32");
      auto values = decompress(decode_blob(e.blob));
      return TensorRecord(e.name, e.shape, std::move(values));
    }
    return TensorRecord::from_payload(e.name, e.shape, e.dtype, lossless_decompress(e.blob));
  });
}

}  // namespace

void validate(const RoutingRule& rule) {
  if (rule.threshold < 1) fail(Errc::InvalidArgument, "routing threshold must be >= 1");
}

bool glob_match(std::string_view pattern, std::string_view text) noexcept {
  std::size_t p = 0, t = 0, star = std::string_view::npos, mark = 0;
  while (t < text.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == text[t])) {
      ++p;
      ++t;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = t;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

Route route_for(const TensorRecord& t, const RoutingRule& rule) {
  if (t.name().find(rule.name_marker) == std::string::npos) return Route::lossless;
  if (t.size() <= rule.threshold) return Route::lossless;
  if (t.dtype() != DType::f32 || !t.all_finite()) return Route::lossless;
  for (const auto& pattern : rule.force_lossless)
    if (glob_match(pattern, t.name())) return Route::lossless;
  return Route::lossy;
}

Partition partition(const StateDict& state, const RoutingRule& rule) {
  validate(rule);
  Partition p;
  for (const auto& t : state)
    (route_for(t, rule) == Route::lossy ? p.lossy : p.lossless).push_back(t.name());
  return p;
}

CompressedUpdate compress_update(const StateDict& state, const CodecSpec& spec, const RoutingRule& rule,
                                 const LosslessSpec& lossless) {
  validate(spec);
  validate(rule);
  validate(lossless);
  CompressedUpdate u;
  u.codec_spec = spec;
  u.original_bytes = state.payload_bytes();
  u.entries.reserve(state.size());
  for (const auto& t : state) u.entries.push_back(compress_entry(t, route_for(t, rule), spec, lossless));
  u.compressed_bytes = serialized_size(u);
  return u;
}

std::uint64_t serialized_size(const CompressedUpdate& update) {
  std::uint64_t n = 4 + 2 + (1 + 1 + 8 + 4 + 4) + 4 + 4;
  for (const auto& e : update.entries)
    n += 2 + e.name.size() + 1 + 1 + 8 * e.shape.size() + 1 + 8 + e.blob.size();
  return n;
}

Bytes serialize_update(const CompressedUpdate& update) {
  ByteWriter w;
  w.str(std::string_view(kMagic, 4));
  w.u16(kUpdateVersion);
  const auto& spec = update.codec_spec;
  w.u8(static_cast<std::uint8_t>(spec.codec));
  w.u8(static_cast<std::uint8_t>(spec.bound.mode));
  w.f64(spec.bound.epsilon);
  w.u32(spec.block_size);
  w.u32(spec.quant_radius);
  w.u32(static_cast<std::uint32_t>(update.entries.size()));
  for (const auto& e : update.entries) {
    w.u16(static_cast<std::uint16_t>(e.name.size()));
    w.str(e.name);
    w.u8(static_cast<std::uint8_t>(e.dtype));
    w.u8(static_cast<std::uint8_t>(e.shape.size()));
    for (auto d : e.shape) w.u64(d);
    w.u8(static_cast<std::uint8_t>(e.route));
    w.u64(e.blob.size());
    w.bytes(e.blob);
  }
  w.crc_from(4);
  return std::move(w).take();
}

CompressedUpdate deserialize_update(ByteSpan bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    fail(Errc::BadMagic, "not an FSZU update (bad magic)");
  if (bytes.size() < serialized_size({})) fail(Errc::TruncatedFile, "update shorter than its header");

  auto body = bytes.subspan(4, bytes.size() - 8);
  ByteReader r(body, Errc::TruncatedFile);
  auto version = r.u16();
  if (version != kUpdateVersion) fail(Errc::CorruptPayload, fmt::format("unsupported update version {}", version));
  CompressedUpdate u;
  u.codec_spec.codec = static_cast<CodecId>(r.u8());
  auto mode = r.u8();
  if (mode > 1) fail(Errc::CorruptPayload, "unknown error bound mode");
  u.codec_spec.bound.mode = static_cast<BoundMode>(mode);
  u.codec_spec.bound.epsilon = r.f64();
  u.codec_spec.block_size = r.u32();
  u.codec_spec.quant_radius = r.u32();
  auto count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    CompressedEntry e;
    e.name = r.str(r.u16());
    e.dtype = dtype_from_byte(r.u8());
    e.shape.resize(r.u8());
    for (auto& d : e.shape) d = r.u64();
    auto route = r.u8();
    if (route > 1) fail(Errc::CorruptPayload, fmt::format("entry '{}': unknown route {}", e.name, route));
    e.route = static_cast<Route>(route);
    auto blob = r.bytes(r.u64());
    e.blob.assign(blob.begin(), blob.end());
    u.original_bytes += element_count(e.shape) * dtype_size(e.dtype);
    u.entries.push_back(std::move(e));
  }
  if (!r.at_end()) fail(Errc::CorruptPayload, "trailing bytes after last update entry");
  if (ByteReader(bytes.last(4)).u32() != crc32(body)) fail(Errc::ChecksumMismatch, "update CRC32 mismatch");
  u.compressed_bytes = bytes.size();
  return u;
}

StateDict decompress_update(const CompressedUpdate& update) {
  StateDict state;
  for (const auto& e : update.entries) state.add(decompress_entry(e));
  return state;
}

StateDict decompress_update(ByteSpan bytes) { return decompress_update(deserialize_update(bytes)); }

PipelineBench measure_pipeline(const StateDict& state, const CodecSpec& spec, const RoutingRule& rule,
                               int repetitions, const LosslessSpec& lossless) {
  if (repetitions < 1) fail(Errc::InvalidArgument, "repetitions must be >= 1");
  using clock = std::chrono::steady_clock;
  std::vector<double> tc, td;
  CompressedUpdate update;
  for (int i = 0; i < repetitions; ++i) {
    auto t0 = clock::now();
    update = compress_update(state, spec, rule, lossless);
    auto bytes = serialize_update(update);
    auto t1 = clock::now();
    auto restored = decompress_update(bytes);
    auto t2 = clock::now();
    tc.push_back(std::chrono::duration<double>(t1 - t0).count());
    td.push_back(std::chrono::duration<double>(t2 - t1).count());
  }

  PipelineBench b;
  b.compress_seconds = median(tc);
  b.decompress_seconds = median(td);
  b.original_bytes = update.original_bytes;
  b.compressed_bytes = update.compressed_bytes;
  b.ratio = update.ratio();
  for (std::size_t i = 0; i < update.entries.size(); ++i) {
    const auto& e = update.entries[i];
    EntryBench eb{e.name, e.route, state.entries()[i].byte_size(), e.blob.size(), 0.0};
    if (e.route == Route::lossy) eb.eps_abs = decode_blob(e.blob).eps_abs;
    b.entries.push_back(std::move(eb));
  }
  return b;
}

}  // namespace fedzip
