#include "fedzip/tensor_store.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include <fmt/core.h>

namespace fedzip {

namespace {

constexpr char kMagic[4] = {'F', 'S', 'Z', 'T'};

template <class T>
bool bits_equal(const std::vector<T>& a, const std::vector<T>& b) {
  return a.size() == b.size() &&
         (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0);
}

}  // namespace

std::string_view dtype_name(DType d) noexcept {
  switch (d) {
    case DType::f32: return "f32";
    case DType::f64: return "f64";
    case DType::i64: return "i64";
    case DType::u8: return "u8";
  }
  return "?";
}

std::size_t dtype_size(DType d) noexcept {
  switch (d) {
    case DType::f32: return 4;
    case DType::f64: return 8;
    case DType::i64: return 8;
    case DType::u8: return 1;
  }
  return 0;
}

DType dtype_from_byte(std::uint8_t b) {
  if (b > 3) fail(Errc::CorruptPayload, fmt::format("unknown dtype byte {}", b));
  return static_cast<DType>(b);
}

std::uint64_t element_count(const Shape& shape) noexcept {
  std::uint64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

TensorRecord::TensorRecord(std::string name, Shape shape, Storage data)
    : name_(std::move(name)), shape_(std::move(shape)), data_(std::move(data)) {
  if (name_.empty()) fail(Errc::InvalidArgument, "tensor name must be non-empty");
  if (name_.size() > std::numeric_limits<std::uint16_t>::max())
    fail(Errc::InvalidArgument, "tensor name too long");
  if (shape_.size() > 255) fail(Errc::InvalidArgument, "tensor rank exceeds 255");
  for (auto d : shape_)
    if (d == 0) fail(Errc::ShapeMismatch, fmt::format("tensor '{}' has a zero dimension", name_));
  auto n = std::visit([](const auto& v) { return static_cast<std::uint64_t>(v.size()); }, data_);
  if (n != element_count(shape_))
    fail(Errc::ShapeMismatch, fmt::format("tensor '{}': shape holds {} elements but data has {}",
                                          name_, element_count(shape_), n));
}

std::span<const float> TensorRecord::f32() const {
  if (dtype() != DType::f32)
    fail(Errc::WrongDtype, fmt::format("tensor '{}' is {}, expected f32", name_, dtype_name(dtype())));
  return std::get<std::vector<float>>(data_);
}

std::span<float> TensorRecord::f32_mut() {
  if (dtype() != DType::f32)
    fail(Errc::WrongDtype, fmt::format("tensor '{}' is {}, expected f32", name_, dtype_name(dtype())));
  return std::get<std::vector<float>>(data_);
}

Bytes TensorRecord::payload() const {
  return std::visit(
      [](const auto& v) {
        Bytes out(v.size() * sizeof(v[0]));
        if (!v.empty()) std::memcpy(out.data(), v.data(), out.size());
        return out;
      },
      data_);
}

TensorRecord TensorRecord::from_payload(std::string name, Shape shape, DType dtype, ByteSpan payload) {
  auto expected = element_count(shape) * dtype_size(dtype);
  if (payload.size() != expected)
    fail(Errc::ShapeMismatch, fmt::format("tensor '{}': shape requires {} payload bytes, found {}",
                                          name, expected, payload.size()));
  auto fill = [&](auto vec) {
    if (!vec.empty()) std::memcpy(vec.data(), payload.data(), payload.size());
    return Storage(std::move(vec));
  };
  auto n = static_cast<std::size_t>(element_count(shape));
  Storage data;
  switch (dtype) {
    case DType::f32: data = fill(std::vector<float>(n)); break;
    case DType::f64: data = fill(std::vector<double>(n)); break;
    case DType::i64: data = fill(std::vector<std::int64_t>(n)); break;
    case DType::u8: data = fill(std::vector<std::uint8_t>(n)); break;
  }
  return TensorRecord(std::move(name), std::move(shape), std::move(data));
}

bool TensorRecord::all_finite() const noexcept {
  return std::visit(
      [](const auto& v) {
        using T = typename std::decay_t<decltype(v)>::value_type;
        if constexpr (std::is_floating_point_v<T>) {
          for (auto x : v)
            if (!std::isfinite(x)) return false;
        }
        return true;
      },
      data_);
}

bool identical(const TensorRecord& a, const TensorRecord& b) noexcept {
  if (a.name_ != b.name_ || a.shape_ != b.shape_ || a.data_.index() != b.data_.index()) return false;
  return std::visit(
      [&](const auto& va) {
        using V = std::decay_t<decltype(va)>;
        return bits_equal(va, std::get<V>(b.data_));
      },
      a.data_);
}

void StateDict::add(TensorRecord t) {
  auto [it, inserted] = index_.emplace(t.name(), entries_.size());
  if (!inserted) fail(Errc::DuplicateName, fmt::format("duplicate tensor name '{}'", t.name()));
  entries_.push_back(std::move(t));
}

const TensorRecord* StateDict::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : &entries_[it->second];
}

const TensorRecord& StateDict::at(std::string_view name) const {
  const auto* t = find(name);
  if (t == nullptr) fail(Errc::StructureMismatch, fmt::format("no tensor named '{}'", name));
  return *t;
}

TensorRecord& StateDict::at_mut(std::string_view name) {
  return const_cast<TensorRecord&>(std::as_const(*this).at(name));
}

std::uint64_t StateDict::payload_bytes() const noexcept {
  std::uint64_t total = 0;
  for (const auto& t : entries_) total += t.byte_size();
  return total;
}

bool identical(const StateDict& a, const StateDict& b) noexcept {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!identical(a.entries_[i], b.entries_[i])) return false;
  return true;
}

// Layout: magic | version u16 | count u32 | entries | crc32 (over all bytes after magic).
// Entry: name-len u16 | name | dtype u8 | rank u8 | dims u64*rank | payload-len u64 | payload.
Bytes serialize_checkpoint(const StateDict& state) {
  ByteWriter w;
  w.str(std::string_view(kMagic, 4));
  w.u16(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(state.size()));
  for (const auto& t : state) {
    w.u16(static_cast<std::uint16_t>(t.name().size()));
    w.str(t.name());
    w.u8(static_cast<std::uint8_t>(t.dtype()));
    w.u8(static_cast<std::uint8_t>(t.shape().size()));
    for (auto d : t.shape()) w.u64(d);
    auto payload = t.payload();
    w.u64(payload.size());
    w.bytes(payload);
  }
  w.crc_from(4);
  return std::move(w).take();
}

StateDict deserialize_checkpoint(ByteSpan bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    fail(Errc::BadMagic, "not an FSZT checkpoint (bad magic)");
  if (bytes.size() < 4 + 2 + 4 + 4) fail(Errc::TruncatedFile, "checkpoint shorter than its header");

  auto body = bytes.subspan(4, bytes.size() - 8);
  ByteReader r(body, Errc::TruncatedFile);
  auto version = r.u16();
  if (version != kCheckpointVersion)
    fail(Errc::CorruptPayload, fmt::format("unsupported checkpoint version {}", version));
  auto count = r.u32();
  StateDict state;
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name = r.str(r.u16());
    auto dtype = dtype_from_byte(r.u8());
    auto rank = r.u8();
    Shape shape(rank);
    for (auto& d : shape) d = r.u64();
    auto len = r.u64();
    auto expected = element_count(shape) * dtype_size(dtype);
    if (len != expected)
      fail(Errc::ShapeMismatch, fmt::format("tensor '{}': shape requires {} payload bytes, header declares {}",
                                            name, expected, len));
    state.add(TensorRecord::from_payload(std::move(name), std::move(shape), dtype, r.bytes(len)));
  }
  if (!r.at_end()) fail(Errc::CorruptPayload, "trailing bytes after last checkpoint entry");
  ByteReader tail(bytes.subspan(bytes.size() - 4));
  if (tail.u32() != crc32(body)) fail(Errc::ChecksumMismatch, "checkpoint CRC32 mismatch");
  return state;
}

StateDict load_checkpoint(const std::string& path) {
  return deserialize_checkpoint(read_file(path));
}

void save_checkpoint(const StateDict& state, const std::string& path) {
  write_file(path, serialize_checkpoint(state));
}

std::span<const float> flatten(const TensorRecord& t) { return t.f32(); }

}  // namespace fedzip
