#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "fedzip/huffman.hpp"
#include "test_util.hpp"

using namespace fedzip;

namespace {

// Optimal total code cost by the textbook two-smallest merge, used as an oracle.
std::uint64_t optimal_cost(std::vector<std::uint64_t> f) {
  std::erase(f, 0);
  if (f.size() == 1) return f[0];
  std::uint64_t cost = 0;
  std::multiset<std::uint64_t> q(f.begin(), f.end());
  while (q.size() > 1) {
    auto a = *q.begin();
    q.erase(q.begin());
    auto b = *q.begin();
    q.erase(q.begin());
    cost += a + b;
    q.insert(a + b);
  }
  return cost;
}

}  // namespace

TEST(Huffman, LengthsAreOptimalAndSatisfyKraft) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 500; ++i) {
    std::vector<std::uint64_t> f(1 + rng() % 60);
    for (auto& x : f) x = (rng() % 3 == 0) ? 0 : 1 + rng() % 1000;
    if (std::all_of(f.begin(), f.end(), [](auto x) { return x == 0; })) f[0] = 1;
    auto len = huffman::code_lengths(f);
    double kraft = 0;
    std::uint64_t cost = 0;
    for (std::size_t s = 0; s < f.size(); ++s) {
      EXPECT_EQ(len[s] == 0, f[s] == 0);
      if (len[s]) kraft += std::ldexp(1.0, -len[s]);
      cost += f[s] * len[s];
    }
    EXPECT_LE(kraft, 1.0 + 1e-12);
    EXPECT_EQ(cost, optimal_cost(f));
  }
}

TEST(Huffman, SingleSymbolGetsOneBit) {
  std::vector<std::uint64_t> f{0, 0, 9};
  auto len = huffman::code_lengths(f);
  EXPECT_EQ(len, (std::vector<std::uint8_t>{0, 0, 1}));
  std::vector<std::uint32_t> syms(100, 2);
  auto stream = huffman::encode(syms);
  EXPECT_EQ(huffman::decode(stream, syms.size()), syms);
}

TEST(Huffman, FibonacciFrequenciesStayWithinLengthLimit) {
  std::vector<std::uint64_t> f{1, 1};
  while (f.size() < 60) f.push_back(f[f.size() - 1] + f[f.size() - 2]);
  auto len = huffman::code_lengths(f);
  EXPECT_LE(*std::max_element(len.begin(), len.end()), huffman::kMaxCodeLength);
  double kraft = 0;
  for (auto l : len) kraft += std::ldexp(1.0, -l);
  EXPECT_LE(kraft, 1.0);
}

TEST(Huffman, RoundTripProperty) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 2000; ++i) {
    std::size_t n = rng() % 2000;
    std::vector<std::uint32_t> syms(n);
    std::geometric_distribution<std::uint32_t> geo(0.3);
    std::uint32_t base = static_cast<std::uint32_t>(rng() % 70000);
    for (auto& s : syms) s = (rng() % 50 == 0) ? static_cast<std::uint32_t>(rng() % 140000) : base + geo(rng);
    auto stream = huffman::encode(syms);
    ASSERT_EQ(huffman::decode(stream, n), syms);
  }
}

TEST(Huffman, SkewedDataCompresses) {
  std::vector<std::uint32_t> syms(100000, 5);
  for (std::size_t i = 0; i < syms.size(); i += 10) syms[i] = 6;
  auto stream = huffman::encode(syms);
  EXPECT_LT(stream.size(), syms.size() / 6);
}

TEST(Huffman, Deterministic) {
  std::vector<std::uint32_t> syms{3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5};
  EXPECT_EQ(huffman::encode(syms), huffman::encode(syms));
}

TEST(Huffman, TruncatedStreamIsCorrupt) {
  std::mt19937_64 rng(3);
  std::vector<std::uint32_t> syms(3000);
  for (auto& s : syms) s = static_cast<std::uint32_t>(rng() % 300);
  auto stream = huffman::encode(syms);
  for (std::size_t len = 0; len < stream.size(); len += 13)
    EXPECT_ERRC(huffman::decode(ByteSpan(stream).first(len), syms.size()), Errc::CorruptPayload);
}

TEST(Huffman, AskingForMoreSymbolsThanEncodedFails) {
  std::vector<std::uint32_t> syms{1, 2, 3, 1, 2, 3};
  auto stream = huffman::encode(syms);
  EXPECT_ERRC(huffman::decode(stream, syms.size() + 50), Errc::CorruptPayload);
}

TEST(Huffman, OversubscribedTableRejected) {
  // three symbols all of length 1
  Bytes bad{3, 0, 1, 1, 1, 1, 1};
  for (int i = 0; i < 8; ++i) bad.push_back(0);
  bad.push_back(0xFF);
  EXPECT_ERRC(huffman::decode(bad, 1), Errc::CorruptPayload);
}
