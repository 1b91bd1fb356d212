#include <gtest/gtest.h>

#include <zlib.h>

#include "fedzip/lossless.hpp"
#include "test_util.hpp"

using namespace fedzip;

namespace {

Bytes random_bytes(std::mt19937_64& rng, std::size_t n) {
  Bytes b(n);
  for (auto& x : b) x = static_cast<std::uint8_t>(rng());
  return b;
}

// Structured input: runs and repeated words, compressible but not trivially.
Bytes structured_bytes(std::mt19937_64& rng, std::size_t n) {
  Bytes b;
  while (b.size() < n) {
    if (rng() % 2) {
      b.insert(b.end(), 1 + rng() % 40, static_cast<std::uint8_t>(rng() % 4));
    } else {
      for (int i = 0; i < 8; ++i) b.push_back(static_cast<std::uint8_t>("abcdefgh"[(i + rng() % 2) % 8]));
    }
  }
  b.resize(n);
  return b;
}

}  // namespace

TEST(Lossless, EmptyInputIsHeaderOnly) {
  for (auto codec : {LosslessCodec::store, LosslessCodec::deflate}) {
    auto f = lossless_compress({}, {codec, 6});
    EXPECT_EQ(f.size(), kStoreFrameOverhead);
    EXPECT_TRUE(lossless_decompress(f).empty());
  }
}

TEST(Lossless, StoreFrameHasFiveByteHeader) {
  Bytes in{1, 2, 3, 4, 5, 6, 7};
  auto f = lossless_compress(in, {LosslessCodec::store, 1});
  ASSERT_EQ(f.size(), in.size() + kStoreFrameOverhead);
  EXPECT_EQ(f[0], 0);
  EXPECT_EQ(Bytes(f.begin() + 5, f.begin() + 12), in);
  EXPECT_EQ(lossless_decompress(f), in);
}

TEST(Lossless, ZerosCompressOverHundredfold) {
  Bytes zeros(1 << 20, 0);
  auto f = lossless_compress(zeros, {LosslessCodec::deflate, 6});
  EXPECT_GT(static_cast<double>(zeros.size()) / static_cast<double>(f.size()), 100.0);
  EXPECT_EQ(lossless_decompress(f), zeros);
}

TEST(Lossless, RandomBytesFallBackToStore) {
  std::mt19937_64 rng(5);
  auto in = random_bytes(rng, 1 << 20);
  auto f = lossless_compress(in, {LosslessCodec::deflate, 9});
  EXPECT_EQ(f[0], 0);
  EXPECT_LE(static_cast<double>(in.size()) / static_cast<double>(f.size()), 1.01);
  EXPECT_EQ(lossless_decompress(f), in);
}

TEST(Lossless, DeflateFrameCarriesRawRfc1951Stream) {
  std::mt19937_64 rng(6);
  auto in = structured_bytes(rng, 5000);
  auto f = lossless_compress(in, {LosslessCodec::deflate, 6});
  ASSERT_EQ(f[0], 1);
  ByteReader r(f);
  r.u8();
  auto raw = r.u64();
  auto comp = r.u64();
  EXPECT_EQ(raw, in.size());
  auto stream = r.bytes(comp);
  // inflate independently with zlib's raw mode
  z_stream zs{};
  ASSERT_EQ(inflateInit2(&zs, -15), Z_OK);
  Bytes out(in.size());
  zs.next_in = const_cast<Bytef*>(stream.data());
  zs.avail_in = static_cast<uInt>(stream.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  EXPECT_EQ(inflate(&zs, Z_FINISH), Z_STREAM_END);
  inflateEnd(&zs);
  EXPECT_EQ(out, in);
}

TEST(Lossless, RoundTripPropertyAndExpansionBound) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 10000; ++i) {
    std::size_t n = rng() % 600;
    auto in = (i % 2) ? random_bytes(rng, n) : structured_bytes(rng, n);
    LosslessSpec spec{(i % 3) ? LosslessCodec::deflate : LosslessCodec::store, 1 + static_cast<int>(rng() % 9)};
    auto f = lossless_compress(in, spec);
    ASSERT_LE(f.size(), in.size() + 16);
    ASSERT_EQ(lossless_decompress(f), in);
  }
}

TEST(Lossless, TruncationIsCorruptStream) {
  std::mt19937_64 rng(8);
  for (auto codec : {LosslessCodec::store, LosslessCodec::deflate}) {
    auto f = lossless_compress(structured_bytes(rng, 3000), {codec, 6});
    for (std::size_t len = 0; len < f.size(); len += 7)
      EXPECT_ERRC(lossless_decompress(ByteSpan(f).first(len)), Errc::CorruptStream);
  }
}

TEST(Lossless, CorruptionIsDetected) {
  std::mt19937_64 rng(9);
  auto f = lossless_compress(structured_bytes(rng, 3000), {});
  for (std::size_t i = 0; i < f.size(); i += 3) {
    auto g = f;
    g[i] ^= 0x40;
    EXPECT_ERRC(lossless_decompress(g), Errc::CorruptStream);
  }
}

TEST(Lossless, LevelValidated) {
  EXPECT_ERRC(validate(LosslessSpec{LosslessCodec::deflate, 0}), Errc::InvalidArgument);
  EXPECT_ERRC(validate(LosslessSpec{LosslessCodec::deflate, 10}), Errc::InvalidArgument);
  EXPECT_NO_THROW(validate(LosslessSpec{LosslessCodec::store, 0}));
}

TEST(Lossless, Deterministic) {
  std::mt19937_64 rng(10);
  auto in = structured_bytes(rng, 10000);
  EXPECT_EQ(lossless_compress(in), lossless_compress(in));
}
