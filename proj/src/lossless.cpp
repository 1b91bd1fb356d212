#include "fedzip/lossless.hpp"

#include <zlib.h>

#include <limits>

#include <fmt/core.h>

namespace fedzip {

namespace {

constexpr std::uint8_t kIdStore = 0;
constexpr std::uint8_t kIdDeflate = 1;
constexpr std::uint8_t kIdStoreLong = 2;

Bytes store_frame(ByteSpan input) {
  ByteWriter w;
  if (input.size() <= std::numeric_limits<std::uint32_t>::max()) {
    w.u8(kIdStore);
    w.u32(static_cast<std::uint32_t>(input.size()));
  } else {
    w.u8(kIdStoreLong);
    w.u64(input.size());
    w.u64(input.size());
  }
  w.bytes(input);
  w.crc_from(0);
  return std::move(w).take();
}

// Raw deflate (no zlib/gzip wrapper). Returns an empty optional-like flag when
// the compressed stream would be no smaller than `limit`.
bool raw_deflate(ByteSpan input, int level, std::size_t limit, Bytes& out) {
  z_stream zs{};
  if (deflateInit2(&zs, level, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY) != Z_OK)
    fail(Errc::InvalidArgument, "deflateInit2 failed");
  out.resize(deflateBound(&zs, static_cast<uLong>(input.size())) + 16);
  zs.next_in = const_cast<Bytef*>(input.data());
  zs.avail_in = static_cast<uInt>(input.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = deflate(&zs, Z_FINISH);
  auto produced = zs.total_out;
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) fail(Errc::InvalidArgument, "deflate did not finish");
  out.resize(produced);
  return out.size() < limit;
}

}  // namespace

void validate(const LosslessSpec& spec) {
  if (spec.codec == LosslessCodec::deflate && (spec.level < 1 || spec.level > 9))
    fail(Errc::InvalidArgument, fmt::format("deflate level must be in [1, 9], got {}", spec.level));
  if (spec.codec != LosslessCodec::deflate && spec.codec != LosslessCodec::store)
    fail(Errc::UnknownCodec, "unknown lossless codec");
}

Bytes lossless_compress(ByteSpan input, const LosslessSpec& spec) {
  validate(spec);
  // zlib's single-shot API is limited to 32-bit lengths.
  if (spec.codec == LosslessCodec::store || input.empty() ||
      input.size() > std::numeric_limits<uInt>::max() / 2)
    return store_frame(input);

  constexpr std::size_t kDeflateHeader = 1 + 8 + 8;
  Bytes packed;
  std::size_t store_size = input.size() + kStoreFrameOverhead;
  if (store_size <= kDeflateHeader + 4) return store_frame(input);
  if (!raw_deflate(input, spec.level, store_size - kDeflateHeader - 4, packed))
    return store_frame(input);

  ByteWriter w;
  w.u8(kIdDeflate);
  w.u64(input.size());
  w.u64(packed.size());
  w.bytes(packed);
  w.crc_from(0);
  return std::move(w).take();
}

Bytes lossless_decompress(ByteSpan frame) {
  if (frame.size() < 5) fail(Errc::CorruptStream, "lossless frame too short");
  ByteReader r(frame.first(frame.size() - 4), Errc::CorruptStream);
  ByteReader crc_reader(frame.last(4), Errc::CorruptStream);
  auto id = r.u8();
  std::uint64_t raw_len = 0;
  std::uint64_t comp_len = 0;
  if (id == kIdStore) {
    raw_len = comp_len = r.u32();
  } else if (id == kIdDeflate || id == kIdStoreLong) {
    raw_len = r.u64();
    comp_len = r.u64();
  } else {
    fail(Errc::CorruptStream, fmt::format("unknown lossless frame id {}", id));
  }
  auto payload = r.bytes(comp_len);
  if (!r.at_end()) fail(Errc::CorruptStream, "trailing bytes in lossless frame");
  if (crc_reader.u32() != crc32(frame.first(frame.size() - 4)))
    fail(Errc::CorruptStream, "lossless frame CRC32 mismatch");

  if (id != kIdDeflate) {
    if (raw_len != comp_len) fail(Errc::CorruptStream, "store frame length mismatch");
    return Bytes(payload.begin(), payload.end());
  }

  if (raw_len > std::numeric_limits<uInt>::max()) fail(Errc::CorruptStream, "deflate frame too large");
  Bytes out(static_cast<std::size_t>(raw_len));
  z_stream zs{};
  if (inflateInit2(&zs, -15) != Z_OK) fail(Errc::CorruptStream, "inflateInit2 failed");
  zs.next_in = const_cast<Bytef*>(payload.data());
  zs.avail_in = static_cast<uInt>(payload.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = inflate(&zs, Z_FINISH);
  auto produced = zs.total_out;
  auto consumed = zs.total_in;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || produced != raw_len || consumed != payload.size())
    fail(Errc::CorruptStream, "deflate stream is corrupt or has the wrong length");
  return out;
}

}  // namespace fedzip
