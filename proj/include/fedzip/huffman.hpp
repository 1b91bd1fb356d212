#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fedzip/bytes.hpp"

namespace fedzip::huffman {

inline constexpr int kMaxCodeLength = 40;

// Code lengths for each symbol in [0, freqs.size()); unused symbols get 0.
// Lengths never exceed kMaxCodeLength. Ties are broken by symbol value so the
// result is a pure function of the frequencies.
std::vector<std::uint8_t> code_lengths(std::span<const std::uint64_t> freqs);

// Self-contained stream: the canonical code table (as code lengths of the
// used symbols) followed by the MSB-first bitstream.
Bytes encode(std::span<const std::uint32_t> symbols);

// Throws CorruptPayload on a malformed table, an invalid code or a short stream.
std::vector<std::uint32_t> decode(ByteSpan stream, std::size_t count);

}  // namespace fedzip::huffman
