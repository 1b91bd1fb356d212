#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "fedzip/bytes.hpp"

namespace fedzip {

enum class DType : std::uint8_t { f32 = 0, f64 = 1, i64 = 2, u8 = 3 };

std::string_view dtype_name(DType d) noexcept;
std::size_t dtype_size(DType d) noexcept;
DType dtype_from_byte(std::uint8_t b);

using Shape = std::vector<std::uint64_t>;

std::uint64_t element_count(const Shape& shape) noexcept;

// A named, shaped, typed tensor with row-major flat storage.
class TensorRecord {
 public:
  using Storage = std::variant<std::vector<float>, std::vector<double>,
                               std::vector<std::int64_t>, std::vector<std::uint8_t>>;

  TensorRecord(std::string name, Shape shape, Storage data);

  const std::string& name() const noexcept { return name_; }
  const Shape& shape() const noexcept { return shape_; }
  DType dtype() const noexcept { return static_cast<DType>(data_.index()); }
  std::uint64_t size() const noexcept { return element_count(shape_); }
  std::uint64_t byte_size() const noexcept { return size() * dtype_size(dtype()); }
  const Storage& storage() const noexcept { return data_; }

  std::span<const float> f32() const;
  std::span<float> f32_mut();

  // Raw little-endian payload bytes.
  Bytes payload() const;
  static TensorRecord from_payload(std::string name, Shape shape, DType dtype, ByteSpan payload);

  bool all_finite() const noexcept;

  // Field-for-field, bit-for-bit equality (distinguishes -0.0 from 0.0, NaN payloads).
  friend bool identical(const TensorRecord& a, const TensorRecord& b) noexcept;

 private:
  std::string name_;
  Shape shape_;
  Storage data_;
};

// Ordered collection of uniquely named tensors. Iteration follows insertion order.
class StateDict {
 public:
  StateDict() = default;

  void add(TensorRecord t);
  const TensorRecord* find(std::string_view name) const;
  const TensorRecord& at(std::string_view name) const;
  TensorRecord& at_mut(std::string_view name);

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }
  const std::vector<TensorRecord>& entries() const noexcept { return entries_; }

  // Sum of raw tensor payload bytes.
  std::uint64_t payload_bytes() const noexcept;

  friend bool identical(const StateDict& a, const StateDict& b) noexcept;

 private:
  std::vector<TensorRecord> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline constexpr std::uint16_t kCheckpointVersion = 1;

Bytes serialize_checkpoint(const StateDict& state);
StateDict deserialize_checkpoint(ByteSpan bytes);

StateDict load_checkpoint(const std::string& path);
void save_checkpoint(const StateDict& state, const std::string& path);

std::span<const float> flatten(const TensorRecord& t);

}  // namespace fedzip
