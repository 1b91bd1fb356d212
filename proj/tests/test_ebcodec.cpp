#include <gtest/gtest.h>

#include <cmath>

#include "fedzip/ebcodec.hpp"
#include "fedzip/huffman.hpp"
#include "fedzip/lossless.hpp"
#include "test_util.hpp"

using namespace fedzip;
using testkit::ArrayKind;

namespace {

CodecSpec spec_for(CodecId id, BoundMode mode, double eps) {
  CodecSpec s;
  s.codec = id;
  s.bound = {mode, eps};
  return s;
}

double max_error(std::span<const float> a, std::span<const float> b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  return m;
}

double blob_ratio(std::size_t n, const LossyBlob& blob) {
  return static_cast<double>(n * sizeof(float)) / static_cast<double>(encode_blob(blob).size());
}

const CodecId kBoth[] = {CodecId::predict_quantize, CodecId::const_block_truncate};

}  // namespace

TEST(ResolveBound, Examples) {
  std::vector<float> unit{0.0f, 0.25f, 1.0f};
  EXPECT_DOUBLE_EQ(resolve_abs_bound({BoundMode::relative, 0.01}, unit), 0.01);
  std::vector<float> flat(10, 3.0f);
  EXPECT_EQ(resolve_abs_bound({BoundMode::relative, 0.1}, flat), 0.0);
  EXPECT_EQ(resolve_abs_bound({BoundMode::absolute, 0.5}, unit), 0.5);
  EXPECT_ERRC(resolve_abs_bound({BoundMode::absolute, 0.5}, std::span<const float>{}), Errc::EmptyInput);
}

TEST(Validate, RejectsBadBoundsAndSpecs) {
  EXPECT_ERRC(validate(ErrorBound{BoundMode::absolute, -1e-3}), Errc::InvalidBound);
  EXPECT_ERRC(validate(ErrorBound{BoundMode::relative, 1.5}), Errc::InvalidBound);
  EXPECT_ERRC(validate(ErrorBound{BoundMode::absolute, NAN}), Errc::InvalidBound);
  EXPECT_NO_THROW(validate(ErrorBound{BoundMode::absolute, 7.0}));
  CodecSpec s;
  s.block_size = 7;
  EXPECT_ERRC(validate(s), Errc::InvalidArgument);
  s.block_size = 8;
  s.quant_radius = 1;
  EXPECT_ERRC(validate(s), Errc::InvalidArgument);
}

TEST(Pq, HandTracedCodes) {
  std::vector<float> v{0.0f, 0.4f, 0.8f};
  auto spec = spec_for(CodecId::predict_quantize, BoundMode::absolute, 0.1);
  auto blob = compress_pq(v, spec);
  EXPECT_EQ(blob.eps_abs, 0.1);
  // payload: mode | radius | literal count | lossless frame of the Huffman stream
  ByteReader r(blob.payload);
  EXPECT_EQ(r.u8(), static_cast<std::uint8_t>(detail::PayloadMode::coded));
  std::uint32_t radius = r.u32();
  EXPECT_EQ(radius, spec.quant_radius);
  EXPECT_EQ(r.u64(), 0u);
  auto frame = r.bytes(r.remaining());
  auto syms = huffman::decode(lossless_decompress(frame), 3);
  std::vector<std::int64_t> q;
  for (auto s : syms) q.push_back(static_cast<std::int64_t>(s) - radius - 1);
  EXPECT_EQ(q, (std::vector<std::int64_t>{0, 2, 2}));
  auto out = decompress_pq(blob);
  EXPECT_EQ(out, v);
}

TEST(Pq, ConstantArrayRatioOverHundred) {
  std::vector<float> v(10000, 1.2345f);
  auto blob = compress_pq(v, spec_for(CodecId::predict_quantize, BoundMode::absolute, 1e-3));
  EXPECT_GT(blob_ratio(v.size(), blob), 100.0);
  EXPECT_EQ(decompress_pq(blob), v);
}

TEST(Pq, NearlyConstantArrayUsesZeroCodes) {
  // not bitwise constant, so the coded path runs; all residuals fall in bin 0
  std::vector<float> v(10000, 1.0f);
  v[5000] = 1.0f + 1e-6f;
  auto blob = compress_pq(v, spec_for(CodecId::predict_quantize, BoundMode::absolute, 1e-3));
  EXPECT_EQ(blob.payload[0], static_cast<std::uint8_t>(detail::PayloadMode::coded));
  EXPECT_GT(blob_ratio(v.size(), blob), 100.0);
  EXPECT_LE(max_error(v, decompress_pq(blob)), 1e-3);
}

TEST(Pq, UniformNoiseAtTinyBoundBarelyCompresses) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> v(100000);
  for (auto& x : v) x = u(rng);
  auto blob = compress_pq(v, spec_for(CodecId::predict_quantize, BoundMode::absolute, 1e-6));
  EXPECT_LE(blob_ratio(v.size(), blob), 1.3);
  EXPECT_LE(max_error(v, decompress_pq(blob)), 1e-6);
}

TEST(Pq, OutliersReconstructBitExactly) {
  std::vector<float> v(2000);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.001f * static_cast<float>(i % 17);
  v[100] = 3.0e7f;
  v[101] = -2.5e7f;
  auto spec = spec_for(CodecId::predict_quantize, BoundMode::absolute, 1e-3);
  spec.quant_radius = 16;
  auto out = decompress_pq(compress_pq(v, spec));
  EXPECT_EQ(std::bit_cast<std::uint32_t>(out[100]), std::bit_cast<std::uint32_t>(v[100]));
  EXPECT_EQ(std::bit_cast<std::uint32_t>(out[101]), std::bit_cast<std::uint32_t>(v[101]));
  EXPECT_LE(max_error(v, out), 1e-3);
}

TEST(Pq, FlippedByteIsDetected) {
  std::mt19937_64 rng(2);
  auto v = testkit::make_array(ArrayKind::spiky, 4000, rng);
  auto frame = encode_blob(compress_pq(v, spec_for(CodecId::predict_quantize, BoundMode::relative, 1e-2)));
  for (std::size_t i = 0; i < frame.size(); i += 5) {
    auto bad = frame;
    bad[i] ^= 0x10;
    try {
      decompress(decode_blob(bad));
      ADD_FAILURE() << "flip at " << i << " not detected";
    } catch (const Error& e) {
      EXPECT_TRUE(e.code() == Errc::CorruptPayload || e.code() == Errc::ChecksumMismatch) << e.what();
    }
  }
}

TEST(Pq, EmptyBlobDecodesToEmpty) {
  LossyBlob blob;
  blob.element_count = 0;
  EXPECT_TRUE(decompress_pq(blob).empty());
  auto b2 = compress_pq(std::vector<float>{}, CodecSpec{});
  EXPECT_EQ(b2.element_count, 0u);
  EXPECT_TRUE(b2.payload.empty());
  EXPECT_TRUE(decompress(decode_blob(encode_blob(b2))).empty());
}

TEST(Pq, IdempotentAtFixedAbsoluteBound) {
  std::mt19937_64 rng(3);
  for (auto kind : {ArrayKind::smooth, ArrayKind::spiky, ArrayKind::mixed_scale}) {
    auto v = testkit::make_array(kind, 5000, rng);
    auto spec = spec_for(CodecId::predict_quantize, BoundMode::absolute, 1e-3);
    auto once = decompress(compress(v, spec));
    auto twice = decompress(compress(once, spec));
    EXPECT_EQ(once, twice);
  }
}

TEST(Cbt, ConstantBlocksRatio) {
  // piecewise-constant blocks with distinct levels: every block takes the 5-byte path
  std::vector<float> v(256 * 200);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(i / 256) * 0.37f;
  auto blob = compress_cbt(v, spec_for(CodecId::const_block_truncate, BoundMode::absolute, 1e-4));
  double expected = 256.0 * 4 / 5;
  double payload_ratio = static_cast<double>(v.size() * 4) / static_cast<double>(blob.payload.size());
  EXPECT_NEAR(payload_ratio, expected, 0.02 * expected);
  EXPECT_EQ(decompress_cbt(blob), v);
}

TEST(Cbt, AlternatingZeroOneAtHalf) {
  std::vector<float> v(1024);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(i % 2);
  auto out = decompress_cbt(compress_cbt(v, spec_for(CodecId::const_block_truncate, BoundMode::absolute, 0.5)));
  for (auto x : out) EXPECT_EQ(x, 0.5f);
  EXPECT_EQ(max_error(v, out), 0.5);
}

TEST(Cbt, UniformNoiseNearMachinePrecision) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> v(100000);
  for (auto& x : v) x = u(rng);
  auto blob = compress_cbt(v, spec_for(CodecId::const_block_truncate, BoundMode::absolute, 1e-7));
  EXPECT_NEAR(blob_ratio(v.size(), blob), 1.0, 0.05);
  EXPECT_LE(max_error(v, decompress_cbt(blob)), 1e-7);
}

TEST(Envelope, NonFiniteRejected) {
  for (auto id : kBoth) {
    std::vector<float> v{1.0f, NAN, 2.0f};
    EXPECT_ERRC(compress(v, spec_for(id, BoundMode::relative, 1e-2)), Errc::NonFiniteInput);
    v[1] = INFINITY;
    EXPECT_ERRC(compress(v, spec_for(id, BoundMode::relative, 1e-2)), Errc::NonFiniteInput);
  }
}

TEST(Envelope, ZeroBoundStoresLiterals) {
  std::mt19937_64 rng(5);
  auto v = testkit::make_array(ArrayKind::spiky, 300, rng);
  for (auto id : kBoth) {
    auto blob = compress(v, spec_for(id, BoundMode::absolute, 0.0));
    EXPECT_EQ(blob.payload[0], static_cast<std::uint8_t>(detail::PayloadMode::literal));
    EXPECT_EQ(decompress(blob), v);
  }
}

TEST(Envelope, RelativeBoundOnConstantArrayIsExact) {
  std::vector<float> v(777, -4.5f);
  for (auto id : kBoth) {
    auto blob = compress(v, spec_for(id, BoundMode::relative, 0.1));
    EXPECT_EQ(blob.eps_abs, 0.0);
    EXPECT_EQ(decompress(blob), v);
  }
}

TEST(Envelope, BlobFrameRoundTrip) {
  std::mt19937_64 rng(6);
  auto v = testkit::make_array(ArrayKind::smooth, 3000, rng);
  for (auto id : kBoth) {
    auto blob = compress(v, spec_for(id, BoundMode::relative, 1e-3));
    auto back = decode_blob(encode_blob(blob));
    EXPECT_EQ(back.codec, blob.codec);
    EXPECT_EQ(back.eps_abs, blob.eps_abs);
    EXPECT_EQ(back.element_count, v.size());
    EXPECT_EQ(back.payload, blob.payload);
    auto mm = std::minmax_element(v.begin(), v.end());
    EXPECT_EQ(back.value_min, *mm.first);
    EXPECT_EQ(back.value_max, *mm.second);
    EXPECT_DOUBLE_EQ(back.eps_abs, 1e-3 * (static_cast<double>(*mm.second) - static_cast<double>(*mm.first)));
  }
}

TEST(Envelope, WrapperRejectsOtherCodecBlob) {
  std::vector<float> v{1, 2, 3, 4};
  auto blob = compress(v, spec_for(CodecId::const_block_truncate, BoundMode::absolute, 0.1));
  EXPECT_ERRC(decompress_pq(blob), Errc::InvalidArgument);
}

TEST(ErrorBoundProperty, BothCodecsAllShapes) {
  std::mt19937_64 rng(7);
  const double eps_list[] = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
  int cases = 0;
  for (int rep = 0; rep < 30; ++rep)
    for (auto kind : {ArrayKind::constant, ArrayKind::smooth, ArrayKind::spiky, ArrayKind::mixed_scale}) {
      auto v = testkit::make_array(kind, 1 + rng() % 3000, rng);
      for (auto id : kBoth)
        for (double eps : eps_list) {
          auto blob = compress(v, spec_for(id, BoundMode::relative, eps));
          auto out = decompress(decode_blob(encode_blob(blob)));
          ASSERT_EQ(out.size(), v.size());
          ASSERT_LE(max_error(v, out), blob.eps_abs) << static_cast<int>(kind) << " eps " << eps;
          ++cases;
        }
    }
  EXPECT_GE(cases, 1000);
}

TEST(Determinism, IdenticalInputsGiveIdenticalPayload) {
  std::mt19937_64 rng(8);
  auto v = testkit::make_array(ArrayKind::mixed_scale, 5000, rng);
  for (auto id : kBoth) {
    auto s = spec_for(id, BoundMode::relative, 1e-3);
    EXPECT_EQ(compress(v, s).payload, compress(v, s).payload);
  }
}

TEST(Monotonicity, RatioNonIncreasingAsBoundTightens) {
  std::mt19937_64 rng(9);
  for (auto kind : {ArrayKind::smooth, ArrayKind::spiky, ArrayKind::mixed_scale}) {
    auto v = testkit::make_array(kind, 20000, rng);
    for (auto id : kBoth) {
      double prev = INFINITY;
      for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
        double r = blob_ratio(v.size(), compress(v, spec_for(id, BoundMode::relative, eps)));
        EXPECT_LE(r, prev) << codec_name(id) << " kind " << static_cast<int>(kind) << " eps " << eps;
        prev = r;
      }
    }
  }
}

TEST(Bench, ConstantMegabyte) {
  std::vector<float> v(1 << 18, 0.75f);
  auto rec = bench_codec(v, spec_for(CodecId::predict_quantize, BoundMode::relative, 1e-2), 3);
  EXPECT_GT(rec.ratio, 50.0);
  EXPECT_EQ(rec.max_abs_error, 0.0);
  EXPECT_EQ(rec.original_bytes, v.size() * 4);
}

TEST(Bench, RepeatedRunsAgreeOnSizesAndErrors) {
  std::mt19937_64 rng(10);
  auto v = testkit::make_array(ArrayKind::spiky, 50000, rng);
  auto s = spec_for(CodecId::const_block_truncate, BoundMode::relative, 1e-3);
  auto a = bench_codec(v, s, 2), b = bench_codec(v, s, 2);
  EXPECT_EQ(a.ratio, b.ratio);
  EXPECT_EQ(a.compressed_bytes, b.compressed_bytes);
  EXPECT_EQ(a.max_abs_error, b.max_abs_error);
  EXPECT_EQ(a.mean_abs_error, b.mean_abs_error);
  EXPECT_LE(a.max_abs_error, a.eps_abs);
  EXPECT_GT(a.ratio, 0.0);
}

TEST(Bench, ZeroRepetitionsRejected) {
  std::vector<float> v{1, 2, 3};
  EXPECT_ERRC(bench_codec(v, CodecSpec{}, 0), Errc::InvalidArgument);
}

TEST(Median, OddAndEven) {
  EXPECT_EQ(median({3, 1, 2}), 2);
  EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
}

namespace {

// Rounds to a multiple of 2 eps; honors the bound and is trivially checkable.
class GridCodec final : public LossyCodec {
 public:
  CodecId id() const override { return static_cast<CodecId>(77); }
  std::string_view name() const override { return "grid"; }
  bool honors_pointwise_bound() const override { return true; }
  Bytes encode(std::span<const float> values, double eps_abs, const CodecSpec&) const override {
    ByteWriter w;
    for (float x : values) w.f32(static_cast<float>(std::round(x / (2 * eps_abs)) * 2 * eps_abs));
    return std::move(w).take();
  }
  std::vector<float> decode(ByteSpan payload, std::size_t count, double) const override {
    ByteReader r(payload, Errc::CorruptPayload);
    std::vector<float> out(count);
    for (auto& x : out) x = r.f32();
    return out;
  }
};

}  // namespace

TEST(Registry, ExternalCodecPlugsIn) {
  register_codec(std::make_shared<GridCodec>());
  EXPECT_ERRC(register_codec(std::make_shared<GridCodec>()), Errc::InvalidArgument);
  EXPECT_EQ(codec_from_name("grid"), static_cast<CodecId>(77));
  EXPECT_EQ(codec_name(static_cast<CodecId>(77)), "grid");
  std::vector<float> v{0.0f, 0.3f, 0.55f, 1.0f};
  CodecSpec s;
  s.codec = static_cast<CodecId>(77);
  s.bound = {BoundMode::absolute, 0.125};
  auto out = decompress(decode_blob(encode_blob(compress(v, s))));
  EXPECT_LE(max_error(v, out), 0.125);
}

TEST(Registry, NamesAndUnknowns) {
  EXPECT_EQ(codec_from_name("pq"), CodecId::predict_quantize);
  EXPECT_EQ(codec_from_name("cbt"), CodecId::const_block_truncate);
  EXPECT_EQ(codec_from_name(codec_name(CodecId::predict_quantize)), CodecId::predict_quantize);
  EXPECT_ERRC(codec_from_name("zfp"), Errc::UnknownCodec);
  EXPECT_ERRC(codec_for(static_cast<CodecId>(200)), Errc::UnknownCodec);
}
