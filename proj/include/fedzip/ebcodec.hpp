#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedzip/bytes.hpp"

namespace fedzip {

enum class BoundMode : std::uint8_t { absolute = 0, relative = 1 };

struct ErrorBound {
  BoundMode mode = BoundMode::relative;
  double epsilon = 1e-2;  // fraction of the value range, or data units when absolute
};

// Wire ids of the built-in codecs. Externally registered codecs use any other
// byte value.
enum class CodecId : std::uint8_t {
  predict_quantize = 1,
  const_block_truncate = 2,
};

struct CodecSpec {
  CodecId codec = CodecId::predict_quantize;
  ErrorBound bound{};
  std::uint32_t block_size = 256;     // elements per block (const-block codec)
  std::uint32_t quant_radius = 32768; // codes on each side of zero (prediction codec)
};

void validate(const ErrorBound& bound);
void validate(const CodecSpec& spec);

struct LossyBlob {
  CodecId codec = CodecId::predict_quantize;
  double eps_abs = 0.0;
  std::uint64_t element_count = 0;
  double value_min = 0.0;
  double value_max = 0.0;
  Bytes payload;
};

// codec u8 | eps_abs f64 | count u64 | min f64 | max f64 | payload-len u64 | payload | crc32
Bytes encode_blob(const LossyBlob& blob);
LossyBlob decode_blob(ByteSpan frame);

// Absolute bound to enforce for `values`: epsilon itself in absolute mode,
// epsilon * (max - min) in relative mode.
double resolve_abs_bound(const ErrorBound& bound, std::span<const float> values);

// A lossy codec over flat f32 arrays. Implementations only see finite,
// non-constant input with eps_abs > 0; the envelope in compress() handles the
// empty, constant and zero-bound cases for every codec.
class LossyCodec {
 public:
  virtual ~LossyCodec() = default;
  virtual CodecId id() const = 0;
  virtual std::string_view name() const = 0;
  // Whether max |x - x_hat| <= eps_abs holds for every element.
  virtual bool honors_pointwise_bound() const = 0;
  virtual Bytes encode(std::span<const float> values, double eps_abs, const CodecSpec& spec) const = 0;
  virtual std::vector<float> decode(ByteSpan payload, std::size_t count, double eps_abs) const = 0;
};

void register_codec(std::shared_ptr<const LossyCodec> codec);
const LossyCodec& codec_for(CodecId id);
// Accepts "pq"/"cbt", the full built-in names, or the name of a registered codec.
CodecId codec_from_name(std::string_view name);
std::string codec_name(CodecId id);

LossyBlob compress(std::span<const float> values, const CodecSpec& spec);
std::vector<float> decompress(const LossyBlob& blob);

LossyBlob compress_pq(std::span<const float> values, const CodecSpec& spec);
std::vector<float> decompress_pq(const LossyBlob& blob);
LossyBlob compress_cbt(std::span<const float> values, const CodecSpec& spec);
std::vector<float> decompress_cbt(const LossyBlob& blob);

struct CodecBenchRecord {
  CodecId codec = CodecId::predict_quantize;
  double epsilon = 0.0;
  double eps_abs = 0.0;
  double compress_seconds = 0.0;
  double decompress_seconds = 0.0;
  std::uint64_t original_bytes = 0;
  std::uint64_t compressed_bytes = 0;
  double ratio = 0.0;
  double max_abs_error = 0.0;
  double mean_abs_error = 0.0;
};

CodecBenchRecord bench_codec(std::span<const float> values, const CodecSpec& spec, int repetitions);

double median(std::vector<double> xs);

namespace detail {
// Payload mode byte written by the envelope in front of codec output.
enum class PayloadMode : std::uint8_t { coded = 0, constant = 1, literal = 2 };

std::shared_ptr<const LossyCodec> make_pq_codec();
std::shared_ptr<const LossyCodec> make_cbt_codec();
}  // namespace detail

}  // namespace fedzip
