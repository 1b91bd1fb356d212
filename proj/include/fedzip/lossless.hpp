#pragma once

#include <cstdint>

#include "fedzip/bytes.hpp"

namespace fedzip {

enum class LosslessCodec : std::uint8_t {
  store = 0,
  deflate = 1,
};

struct LosslessSpec {
  LosslessCodec codec = LosslessCodec::deflate;
  int level = 6;  // 1..9, deflate only
};

void validate(const LosslessSpec& spec);

// Frames:
//   store:   id u8 | raw-len u32 | payload | crc32
//   deflate: id u8 | raw-len u64 | comp-len u64 | raw RFC 1951 stream | crc32
//   store (>4 GiB): same layout as deflate with id 2
// The CRC covers every preceding byte of the frame. A deflate request falls
// back to the store frame whenever deflating would not make the frame smaller.
Bytes lossless_compress(ByteSpan input, const LosslessSpec& spec = {});
Bytes lossless_decompress(ByteSpan frame);

inline constexpr std::size_t kStoreFrameOverhead = 1 + 4 + 4;

}  // namespace fedzip
