// Prediction + quantization codec: 1D Lorenzo predictor over reconstructed
// values, residuals quantized into bins of width 2*eps_abs, codes Huffman
// coded and then deflated. Elements whose code falls outside the radius are
// kept as f32 literals.

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "fedzip/ebcodec.hpp"
#include "fedzip/huffman.hpp"
#include "fedzip/lossless.hpp"

namespace fedzip::detail {

namespace {

constexpr std::uint32_t kLiteralSymbol = 0;
constexpr LosslessSpec kCodeStreamSpec{LosslessCodec::deflate, 3};

// Shared by encoder and decoder so both sides produce the same float.
inline float reconstruct(float prediction, std::int64_t code, double eps_abs) {
  return static_cast<float>(static_cast<double>(prediction) + (2.0 * eps_abs) * static_cast<double>(code));
}

inline double bin_index(double residual, double eps_abs) { return std::round(residual / (2.0 * eps_abs)); }

class PredictQuantizeCodec final : public LossyCodec {
 public:
  CodecId id() const override { return CodecId::predict_quantize; }
  std::string_view name() const override { return "predict_quantize"; }
  bool honors_pointwise_bound() const override { return true; }

  Bytes encode(std::span<const float> values, double eps_abs, const CodecSpec& spec) const override {
    const auto radius = static_cast<double>(spec.quant_radius);
    const auto offset = static_cast<std::int64_t>(spec.quant_radius) + 1;
    std::vector<std::uint32_t> symbols;
    symbols.reserve(values.size());
    std::vector<float> literals;

    float prediction = 0.0f;
    for (float x : values) {
      double q = bin_index(static_cast<double>(x) - static_cast<double>(prediction), eps_abs);
      if (std::abs(q) <= radius) {
        auto code = static_cast<std::int64_t>(q);
        float rec = reconstruct(prediction, code, eps_abs);
        // Float rounding of the reconstruction can push it past the bound; the
        // second condition makes a reconstruction re-encode to the same code.
        if (std::abs(static_cast<double>(x) - static_cast<double>(rec)) <= eps_abs &&
            bin_index(static_cast<double>(rec) - static_cast<double>(prediction), eps_abs) == q) {
          symbols.push_back(static_cast<std::uint32_t>(code + offset));
          prediction = rec;
          continue;
        }
      }
      symbols.push_back(kLiteralSymbol);
      literals.push_back(x);
      prediction = x;
    }

    ByteWriter w;
    w.u32(spec.quant_radius);
    w.u64(literals.size());
    for (auto v : literals) w.f32(v);
    w.bytes(lossless_compress(huffman::encode(symbols), kCodeStreamSpec));
    return std::move(w).take();
  }

  std::vector<float> decode(ByteSpan payload, std::size_t count, double eps_abs) const override {
    ByteReader r(payload, Errc::CorruptPayload);
    auto radius = r.u32();
    if (radius < 2 || radius > (1u << 30)) fail(Errc::CorruptPayload, "invalid quantization radius");
    auto nliterals = r.u64();
    if (nliterals > count || nliterals * 4 > r.remaining())
      fail(Errc::CorruptPayload, "literal count exceeds payload");
    std::vector<float> literals(static_cast<std::size_t>(nliterals));
    for (auto& v : literals) v = r.f32();

    Bytes stream;
    try {
      stream = lossless_decompress(r.bytes(r.remaining()));
    } catch (const Error& e) {
      fail(Errc::CorruptPayload, fmt::format("code stream: {}", e.what()));
    }
    auto symbols = huffman::decode(stream, count);

    const auto offset = static_cast<std::int64_t>(radius) + 1;
    const auto max_symbol = static_cast<std::uint32_t>(2 * static_cast<std::uint64_t>(radius) + 1);
    std::vector<float> out;
    out.reserve(std::min<std::size_t>(count, std::size_t{1} << 24));
    std::size_t next_literal = 0;
    float prediction = 0.0f;
    for (auto s : symbols) {
      if (s == kLiteralSymbol) {
        if (next_literal >= literals.size()) fail(Errc::CorruptPayload, "literal list exhausted");
        prediction = literals[next_literal++];
      } else {
        if (s > max_symbol) fail(Errc::CorruptPayload, "quantization code out of range");
        prediction = reconstruct(prediction, static_cast<std::int64_t>(s) - offset, eps_abs);
      }
      out.push_back(prediction);
    }
    if (next_literal != literals.size()) fail(Errc::CorruptPayload, "unused literals in payload");
    return out;
  }
};

}  // namespace

std::shared_ptr<const LossyCodec> make_pq_codec() { return std::make_shared<PredictQuantizeCodec>(); }

}  // namespace fedzip::detail
