// Constant-block / truncation codec. Each block either collapses to its
// midrange value (range <= 2*eps_abs) or keeps sign, exponent and the fewest
// leading mantissa bits that bound the truncation error by eps_abs.

#include <algorithm>
#include <bit>
#include <cmath>

#include <fmt/core.h>

#include "fedzip/ebcodec.hpp"

namespace fedzip::detail {

namespace {

constexpr std::uint8_t kConstantFlag = 0;
constexpr int kMantissaBits = 23;

// Unbiased exponent with subnormals pinned to the minimum normal exponent.
int exponent_of(float v) {
  auto field = static_cast<int>((std::bit_cast<std::uint32_t>(v) >> 23) & 0xff);
  return std::max(field, 1) - 127;
}

// Fewest mantissa bits m with 2^(emax - m) <= eps_abs; 23 keeps the value exact.
int mantissa_bits_for(int emax, double eps_abs) {
  for (int m = 0; m < kMantissaBits; ++m)
    if (std::ldexp(1.0, emax - m) <= eps_abs) return m;
  return kMantissaBits;
}

class BitPacker {
 public:
  explicit BitPacker(Bytes& out) : out_(out) {}
  void put(std::uint32_t v, int n) {
    for (int i = n - 1; i >= 0; --i) {
      acc_ = static_cast<std::uint8_t>((acc_ << 1) | ((v >> i) & 1u));
      if (++fill_ == 8) flush_byte();
    }
  }
  void align() {
    if (fill_ > 0) {
      acc_ = static_cast<std::uint8_t>(acc_ << (8 - fill_));
      flush_byte();
    }
  }

 private:
  void flush_byte() {
    out_.push_back(acc_);
    acc_ = 0;
    fill_ = 0;
  }
  Bytes& out_;
  std::uint8_t acc_ = 0;
  int fill_ = 0;
};

class BitUnpacker {
 public:
  explicit BitUnpacker(ByteSpan in) : in_(in) {}
  std::uint32_t get(int n) {
    std::uint32_t v = 0;
    for (int i = 0; i < n; ++i) {
      if (pos_ >= in_.size() * 8) fail(Errc::CorruptPayload, "truncated block bits");
      v = (v << 1) | ((in_[pos_ >> 3] >> (7 - (pos_ & 7))) & 1u);
      ++pos_;
    }
    return v;
  }

 private:
  ByteSpan in_;
  std::size_t pos_ = 0;
};

class ConstBlockTruncateCodec final : public LossyCodec {
 public:
  CodecId id() const override { return CodecId::const_block_truncate; }
  std::string_view name() const override { return "const_block_truncate"; }
  bool honors_pointwise_bound() const override { return true; }

  Bytes encode(std::span<const float> values, double eps_abs, const CodecSpec& spec) const override {
    ByteWriter header;
    header.u32(spec.block_size);
    Bytes out = std::move(header).take();
    BitPacker bits(out);

    for (std::size_t start = 0; start < values.size(); start += spec.block_size) {
      auto block = values.subspan(start, std::min<std::size_t>(spec.block_size, values.size() - start));
      auto [lo, hi] = std::minmax_element(block.begin(), block.end());
      double lo_d = *lo, hi_d = *hi;
      if (hi_d - lo_d <= 2.0 * eps_abs) {
        auto mid = static_cast<float>(0.5 * (lo_d + hi_d));
        bool within = std::abs(static_cast<double>(mid) - lo_d) <= eps_abs &&
                      std::abs(hi_d - static_cast<double>(mid)) <= eps_abs;
        if (within) {
          out.push_back(kConstantFlag);
          auto mb = std::bit_cast<std::uint32_t>(mid);
          for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(mb >> (8 * i)));
          continue;
        }
      }
      int emax = -127;
      for (auto v : block) emax = std::max(emax, exponent_of(v));
      int m = mantissa_bits_for(emax, eps_abs);
      out.push_back(static_cast<std::uint8_t>(1 + m));
      int keep = 9 + m;
      for (auto v : block) bits.put(std::bit_cast<std::uint32_t>(v) >> (kMantissaBits - m), keep);
      bits.align();
    }
    return out;
  }

  std::vector<float> decode(ByteSpan payload, std::size_t count, double) const override {
    ByteReader r(payload, Errc::CorruptPayload);
    auto block_size = r.u32();
    if (block_size < 1) fail(Errc::CorruptPayload, "invalid block size");
    std::vector<float> out;
    out.reserve(std::min<std::size_t>(count, std::size_t{1} << 24));
    while (out.size() < count) {
      auto n = std::min<std::size_t>(block_size, count - out.size());
      auto flag = r.u8();
      if (flag == kConstantFlag) {
        out.insert(out.end(), n, r.f32());
        continue;
      }
      int m = flag - 1;
      if (m > kMantissaBits) fail(Errc::CorruptPayload, fmt::format("invalid block flag {}", flag));
      int keep = 9 + m;
      auto nbytes = (n * static_cast<std::size_t>(keep) + 7) / 8;
      BitUnpacker bits(r.bytes(nbytes));
      for (std::size_t i = 0; i < n; ++i) {
        auto v = std::bit_cast<float>(bits.get(keep) << (kMantissaBits - m));
        if (!std::isfinite(v)) fail(Errc::CorruptPayload, "non-finite value in truncated block");
        out.push_back(v);
      }
    }
    if (!r.at_end()) fail(Errc::CorruptPayload, "trailing bytes after last block");
    return out;
  }
};

}  // namespace

std::shared_ptr<const LossyCodec> make_cbt_codec() { return std::make_shared<ConstBlockTruncateCodec>(); }

}  // namespace fedzip::detail
