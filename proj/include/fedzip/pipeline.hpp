#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedzip/ebcodec.hpp"
#include "fedzip/lossless.hpp"
#include "fedzip/tensor_store.hpp"

namespace fedzip {

struct RoutingRule {
  std::string name_marker = "weight";     // substring that marks lossy candidates
  std::uint64_t threshold = 1024;         // element count must exceed this
  std::vector<std::string> force_lossless; // glob patterns ('*', '?') over full names
};

void validate(const RoutingRule& rule);
bool glob_match(std::string_view pattern, std::string_view text) noexcept;

enum class Route : std::uint8_t { lossy = 0, lossless = 1 };

struct Partition {
  std::vector<std::string> lossy;
  std::vector<std::string> lossless;
};

Route route_for(const TensorRecord& t, const RoutingRule& rule);
Partition partition(const StateDict& state, const RoutingRule& rule);

struct CompressedEntry {
  std::string name;
  Shape shape;
  DType dtype = DType::f32;
  Route route = Route::lossless;
  Bytes blob;  // LossyBlob frame or lossless frame
};

struct CompressedUpdate {
  std::vector<CompressedEntry> entries;
  CodecSpec codec_spec;
  std::uint64_t original_bytes = 0;    // S: raw tensor payload bytes
  std::uint64_t compressed_bytes = 0;  // S': serialized update size

  double ratio() const noexcept {
    return compressed_bytes == 0 ? 0.0
                                 : static_cast<double>(original_bytes) / static_cast<double>(compressed_bytes);
  }
};

inline constexpr std::uint16_t kUpdateVersion = 1;

CompressedUpdate compress_update(const StateDict& state, const CodecSpec& spec,
                                 const RoutingRule& rule = {}, const LosslessSpec& lossless = {});

// magic "FSZU" | version u16 | codec u8 | mode u8 | epsilon f64 | block u32 | radius u32 |
// count u32 | entries (name-len u16, name, dtype u8, rank u8, dims u64*rank, route u8,
// blob-len u64, blob) | crc32 over everything after the magic
Bytes serialize_update(const CompressedUpdate& update);
std::uint64_t serialized_size(const CompressedUpdate& update);
CompressedUpdate deserialize_update(ByteSpan bytes);

StateDict decompress_update(const CompressedUpdate& update);
StateDict decompress_update(ByteSpan bytes);

struct EntryBench {
  std::string name;
  Route route = Route::lossless;
  std::uint64_t original_bytes = 0;
  std::uint64_t compressed_bytes = 0;
  double eps_abs = 0.0;  // 0 for lossless entries
};

struct PipelineBench {
  double compress_seconds = 0.0;
  double decompress_seconds = 0.0;
  std::uint64_t original_bytes = 0;
  std::uint64_t compressed_bytes = 0;
  double ratio = 0.0;
  std::vector<EntryBench> entries;
};

PipelineBench measure_pipeline(const StateDict& state, const CodecSpec& spec, const RoutingRule& rule,
                               int repetitions, const LosslessSpec& lossless = {});

}  // namespace fedzip
