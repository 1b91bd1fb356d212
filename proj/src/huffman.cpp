#include "fedzip/huffman.hpp"

#include <algorithm>
#include <map>
#include <queue>

#include <fmt/core.h>

namespace fedzip::huffman {

namespace {

void put_varint(ByteWriter& w, std::uint64_t v) {
  while (v >= 0x80) {
    w.u8(static_cast<std::uint8_t>(v | 0x80));
    v >>= 7;
  }
  w.u8(static_cast<std::uint8_t>(v));
}

std::uint64_t get_varint(ByteReader& r) {
  std::uint64_t v = 0;
  for (int shift = 0; shift < 64; shift += 7) {
    auto b = r.u8();
    v |= static_cast<std::uint64_t>(b & 0x7f) << shift;
    if ((b & 0x80) == 0) return v;
  }
  fail(Errc::CorruptPayload, "varint too long");
}

class BitWriter {
 public:
  void put(std::uint64_t code, int len) {
    for (int i = len - 1; i >= 0; --i) {
      acc_ = static_cast<std::uint8_t>((acc_ << 1) | ((code >> i) & 1u));
      if (++fill_ == 8) {
        out_.push_back(acc_);
        acc_ = 0;
        fill_ = 0;
      }
    }
    bits_ += static_cast<std::uint64_t>(len);
  }
  std::uint64_t bits() const { return bits_; }
  Bytes finish() && {
    if (fill_ > 0) out_.push_back(static_cast<std::uint8_t>(acc_ << (8 - fill_)));
    return std::move(out_);
  }

 private:
  Bytes out_;
  std::uint8_t acc_ = 0;
  int fill_ = 0;
  std::uint64_t bits_ = 0;
};

class BitReader {
 public:
  BitReader(ByteSpan data, std::uint64_t nbits) : data_(data), nbits_(nbits) {}

  // Next `n` bits (n <= 32) MSB-first, zero padded past the end.
  std::uint32_t peek(int n) const {
    std::uint32_t v = 0;
    for (int i = 0; i < n; ++i) v = (v << 1) | bit_at(pos_ + static_cast<std::uint64_t>(i));
    return v;
  }
  std::uint32_t bit() {
    if (pos_ >= nbits_) fail(Errc::CorruptPayload, "Huffman bitstream truncated");
    return bit_at(pos_++);
  }
  void skip(int n) {
    pos_ += static_cast<std::uint64_t>(n);
    if (pos_ > nbits_) fail(Errc::CorruptPayload, "Huffman bitstream truncated");
  }

 private:
  std::uint32_t bit_at(std::uint64_t p) const {
    if (p >= nbits_) return 0;
    return (data_[static_cast<std::size_t>(p >> 3)] >> (7 - (p & 7))) & 1u;
  }

  ByteSpan data_;
  std::uint64_t nbits_;
  std::uint64_t pos_ = 0;
};

struct Table {
  std::vector<std::uint32_t> sorted;     // symbols ordered by (length, symbol)
  std::vector<std::uint64_t> count;      // codes per length
  int max_len = 0;
};

// Pairs of (symbol, length) -> canonical codes, in table order.
std::vector<std::uint64_t> canonical_codes(const std::vector<std::pair<std::uint32_t, int>>& ordered) {
  std::vector<std::uint64_t> codes(ordered.size());
  std::uint64_t code = 0;
  int prev_len = ordered.empty() ? 0 : ordered.front().second;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    code <<= (ordered[i].second - prev_len);
    prev_len = ordered[i].second;
    codes[i] = code++;
  }
  return codes;
}

constexpr int kLookupBits = 11;

}  // namespace

std::vector<std::uint8_t> code_lengths(std::span<const std::uint64_t> freqs) {
  std::vector<std::uint8_t> lengths(freqs.size(), 0);
  std::vector<std::uint64_t> work(freqs.begin(), freqs.end());
  std::size_t used = std::count_if(work.begin(), work.end(), [](auto f) { return f > 0; });
  if (used == 0) return lengths;
  if (used == 1) {
    for (std::size_t s = 0; s < work.size(); ++s)
      if (work[s] > 0) lengths[s] = 1;
    return lengths;
  }

  for (;;) {
    // Node ids: leaves first (by symbol), then internal nodes in creation order.
    struct Node {
      std::uint64_t weight;
      std::size_t id;
      bool operator>(const Node& o) const {
        return weight != o.weight ? weight > o.weight : id > o.id;
      }
    };
    std::vector<std::size_t> parent;
    std::vector<std::uint32_t> leaf_symbol;
    std::priority_queue<Node, std::vector<Node>, std::greater<>> heap;
    for (std::size_t s = 0; s < work.size(); ++s) {
      if (work[s] == 0) continue;
      heap.push({work[s], leaf_symbol.size()});
      leaf_symbol.push_back(static_cast<std::uint32_t>(s));
      parent.push_back(0);
    }
    while (heap.size() > 1) {
      auto a = heap.top();
      heap.pop();
      auto b = heap.top();
      heap.pop();
      auto id = parent.size();
      parent.push_back(id);
      parent[a.id] = id;
      parent[b.id] = id;
      heap.push({a.weight + b.weight, id});
    }
    auto root = heap.top().id;
    // Parents always have larger ids than children, so walk ids downwards.
    std::vector<int> depth(parent.size(), 0);
    for (std::size_t id = parent.size(); id-- > 0;)
      if (id != root) depth[id] = depth[parent[id]] + 1;

    int deepest = 0;
    for (std::size_t i = 0; i < leaf_symbol.size(); ++i) deepest = std::max(deepest, depth[i]);
    if (deepest <= kMaxCodeLength) {
      for (std::size_t i = 0; i < leaf_symbol.size(); ++i)
        lengths[leaf_symbol[i]] = static_cast<std::uint8_t>(depth[i]);
      return lengths;
    }
    // Flatten the distribution and retry; converges because all weights tend to 1.
    for (auto& f : work)
      if (f > 0) f = std::max<std::uint64_t>(1, f >> 1);
  }
}

Bytes encode(std::span<const std::uint32_t> symbols) {
  std::map<std::uint32_t, std::uint64_t> hist;
  for (auto s : symbols) ++hist[s];

  std::vector<std::uint32_t> alphabet;
  std::vector<std::uint64_t> freqs;
  for (auto [s, f] : hist) {
    alphabet.push_back(s);
    freqs.push_back(f);
  }
  auto lengths = code_lengths(freqs);

  std::vector<std::pair<std::uint32_t, int>> ordered;
  for (std::size_t i = 0; i < alphabet.size(); ++i) ordered.emplace_back(alphabet[i], lengths[i]);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto& a, const auto& b) { return a.second < b.second; });
  auto codes = canonical_codes(ordered);

  std::map<std::uint32_t, std::pair<std::uint64_t, int>> book;
  for (std::size_t i = 0; i < ordered.size(); ++i) book[ordered[i].first] = {codes[i], ordered[i].second};
  // Dense lookup for the common small-alphabet case.
  std::vector<std::pair<std::uint64_t, int>> dense;
  if (!alphabet.empty()) {
    dense.resize(static_cast<std::size_t>(alphabet.back()) + 1, {0, 0});
    for (auto& [s, cl] : book) dense[s] = cl;
  }

  ByteWriter w;
  put_varint(w, alphabet.size());
  std::uint32_t prev = 0;
  for (std::size_t i = 0; i < alphabet.size(); ++i) {
    put_varint(w, alphabet[i] - prev);
    prev = alphabet[i];
    w.u8(lengths[i]);
  }
  BitWriter bits;
  for (auto s : symbols) {
    const auto& [code, len] = dense[s];
    bits.put(code, len);
  }
  w.u64(bits.bits());
  w.bytes(std::move(bits).finish());
  return std::move(w).take();
}

std::vector<std::uint32_t> decode(ByteSpan stream, std::size_t count) {
  ByteReader r(stream, Errc::CorruptPayload);
  auto used = get_varint(r);
  if (used > stream.size()) fail(Errc::CorruptPayload, "Huffman table size is implausible");
  if (used == 0 && count > 0) fail(Errc::CorruptPayload, "empty Huffman table for non-empty stream");

  std::vector<std::pair<std::uint32_t, int>> ordered;
  ordered.reserve(static_cast<std::size_t>(used));
  std::uint64_t sym = 0;
  for (std::uint64_t i = 0; i < used; ++i) {
    auto delta = get_varint(r);
    if (i > 0 && delta == 0) fail(Errc::CorruptPayload, "Huffman symbols not strictly increasing");
    sym += delta;
    if (sym > 0xffffffffu) fail(Errc::CorruptPayload, "Huffman symbol out of range");
    int len = r.u8();
    if (len < 1 || len > kMaxCodeLength) fail(Errc::CorruptPayload, "invalid Huffman code length");
    ordered.emplace_back(static_cast<std::uint32_t>(sym), len);
  }
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto& a, const auto& b) { return a.second < b.second; });

  Table t;
  t.max_len = ordered.empty() ? 0 : ordered.back().second;
  t.count.assign(static_cast<std::size_t>(t.max_len) + 1, 0);
  for (auto& [s, len] : ordered) {
    t.sorted.push_back(s);
    ++t.count[static_cast<std::size_t>(len)];
  }
  // Kraft check: the code must not be over-subscribed.
  long double kraft = 0;
  for (int len = 1; len <= t.max_len; ++len)
    kraft += static_cast<long double>(t.count[static_cast<std::size_t>(len)]) / static_cast<long double>(1ull << len);
  if (kraft > 1.0L) fail(Errc::CorruptPayload, "Huffman code is over-subscribed");

  auto codes = canonical_codes(ordered);
  // (symbol index + 1, length) for every kLookupBits-bit prefix fully determined by a short code.
  std::vector<std::pair<std::uint32_t, int>> lookup(1u << kLookupBits, {0, 0});
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    int len = ordered[i].second;
    if (len > kLookupBits) break;
    auto base = codes[i] << (kLookupBits - len);
    for (std::uint64_t k = 0; k < (1ull << (kLookupBits - len)); ++k)
      lookup[static_cast<std::size_t>(base + k)] = {static_cast<std::uint32_t>(i + 1), len};
  }

  auto nbits = r.u64();
  auto body = r.bytes(r.remaining());
  if ((nbits + 7) / 8 != body.size()) fail(Errc::CorruptPayload, "Huffman bitstream length mismatch");

  BitReader bits(body, nbits);
  std::vector<std::uint32_t> out;
  out.reserve(std::min<std::size_t>(count, std::size_t{1} << 24));
  for (std::size_t n = 0; n < count; ++n) {
    auto [idx, len] = lookup[bits.peek(kLookupBits)];
    if (idx != 0) {
      bits.skip(len);
      out.push_back(ordered[idx - 1].first);
      continue;
    }
    // Canonical decode, one bit at a time.
    std::uint64_t code = 0, first = 0, index = 0;
    bool found = false;
    for (int l = 1; l <= t.max_len; ++l) {
      code |= bits.bit();
      auto c = t.count[static_cast<std::size_t>(l)];
      if (code - first < c) {
        out.push_back(t.sorted[static_cast<std::size_t>(index + (code - first))]);
        found = true;
        break;
      }
      index += c;
      first = (first + c) << 1;
      code <<= 1;
    }
    if (!found) fail(Errc::CorruptPayload, "invalid Huffman code in stream");
  }
  return out;
}

}  // namespace fedzip::huffman
