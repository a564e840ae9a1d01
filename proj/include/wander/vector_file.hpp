#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace wander {

/// Keyed table of fixed-dimension float vectors, stored row-major. Row order
/// is insertion order and is preserved by the WNDR file format.
class VectorTable {
 public:
  VectorTable() = default;
  explicit VectorTable(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return keys_.size(); }
  bool empty() const noexcept { return keys_.empty(); }

  /// Throws DimensionMismatch on a wrong length, CorruptHeader on a
  /// duplicate key, InvalidArgument on a non-finite component.
  void add(std::string key, std::span<const float> values);

  const std::string& key(std::size_t row) const { return keys_.at(row); }
  const std::vector<std::string>& keys() const noexcept { return keys_; }
  std::span<const float> row(std::size_t row) const {
    return {data_.data() + row * dim_, dim_};
  }
  std::optional<std::span<const float>> find(std::string_view key) const;
  bool contains(std::string_view key) const { return find(key).has_value(); }

  bool operator==(const VectorTable& other) const {
    return dim_ == other.dim_ && keys_ == other.keys_ && data_ == other.data_;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> keys_;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

// WNDR layout:
//   "WNDR1\n"
//   "dim=<u32> count=<u64>\n"
//   count x { u16 key length (LE), key bytes, dim x f32 (LE) }
void write_vector_file(const std::filesystem::path& path, const VectorTable& table);
std::string encode_vector_table(const VectorTable& table);

/// Throws IoError when the file cannot be opened and CorruptHeader on any
/// format violation, including a truncated payload or trailing bytes.
VectorTable read_vector_file(const std::filesystem::path& path);
VectorTable decode_vector_table(std::string_view bytes);

}  // namespace wander
