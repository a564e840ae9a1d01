#include "wander/vector_file.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "wander/errors.hpp"

namespace wander {

namespace {

constexpr std::string_view kMagic = "WNDR1\n";

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

void put_f32(std::string& out, float f) {
  const auto bits = std::bit_cast<std::uint32_t>(f);
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<char>((bits >> shift) & 0xFF));
}

float get_f32(const unsigned char* p) {
  const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                             (static_cast<std::uint32_t>(p[2]) << 16) |
                             (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

template <typename T>
T parse_field(std::string_view text, std::string_view name) {
  if (text.substr(0, name.size()) != name || text.size() == name.size()) {
    throw CorruptHeader("expected field \"" + std::string(name) + "\" in WNDR header");
  }
  text.remove_prefix(name.size());
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw CorruptHeader("bad value for \"" + std::string(name) + "\" in WNDR header");
  }
  return value;
}

}  // namespace

void VectorTable::add(std::string key, std::span<const float> values) {
  if (values.size() != dim_) throw DimensionMismatch(dim_, values.size());
  if (key.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw InvalidArgument("vector key longer than 65535 bytes");
  }
  for (float v : values) {
    if (!std::isfinite(v)) throw InvalidArgument("non-finite component in vector \"" + key + "\"");
  }
  if (index_.contains(key)) throw CorruptHeader("duplicate vector key \"" + key + "\"");
  index_.emplace(key, keys_.size());
  keys_.push_back(std::move(key));
  data_.insert(data_.end(), values.begin(), values.end());
}

std::optional<std::span<const float>> VectorTable::find(std::string_view key) const {
  const auto it = index_.find(std::string(key));
  if (it == index_.end()) return std::nullopt;
  return row(it->second);
}

std::string encode_vector_table(const VectorTable& table) {
  std::string out(kMagic);
  out += "dim=" + std::to_string(table.dim()) + " count=" + std::to_string(table.size()) + "\n";
  for (std::size_t r = 0; r < table.size(); ++r) {
    const auto& key = table.key(r);
    put_u16(out, static_cast<std::uint16_t>(key.size()));
    out += key;
    for (float v : table.row(r)) put_f32(out, v);
  }
  return out;
}

void write_vector_file(const std::filesystem::path& path, const VectorTable& table) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  const auto bytes = encode_vector_table(table);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

VectorTable decode_vector_table(std::string_view bytes) {
  if (bytes.substr(0, kMagic.size()) != kMagic) throw CorruptHeader("missing WNDR1 magic");
  bytes.remove_prefix(kMagic.size());

  const auto eol = bytes.find('\n');
  if (eol == std::string_view::npos) throw CorruptHeader("unterminated WNDR header line");
  const std::string_view header = bytes.substr(0, eol);
  bytes.remove_prefix(eol + 1);
  const auto space = header.find(' ');
  if (space == std::string_view::npos) throw CorruptHeader("malformed WNDR header line");
  const auto dim = parse_field<std::uint32_t>(header.substr(0, space), "dim=");
  const auto count = parse_field<std::uint64_t>(header.substr(space + 1), "count=");
  if (dim == 0) throw CorruptHeader("WNDR dim must be positive");

  VectorTable table(dim);
  std::vector<float> values(dim);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  std::size_t remaining = bytes.size();
  for (std::uint64_t r = 0; r < count; ++r) {
    if (remaining < 2) throw CorruptHeader("WNDR payload truncated at record " + std::to_string(r));
    const std::size_t key_len = static_cast<std::size_t>(p[0]) | (static_cast<std::size_t>(p[1]) << 8);
    p += 2;
    remaining -= 2;
    const std::size_t need = key_len + static_cast<std::size_t>(dim) * 4;
    if (remaining < need) throw CorruptHeader("WNDR payload truncated at record " + std::to_string(r));
    std::string key(reinterpret_cast<const char*>(p), key_len);
    p += key_len;
    for (std::size_t i = 0; i < dim; ++i, p += 4) values[i] = get_f32(p);
    remaining -= need;
    try {
      table.add(std::move(key), values);
    } catch (const InvalidArgument& e) {
      throw CorruptHeader(e.what());
    }
  }
  if (remaining != 0) throw CorruptHeader("trailing bytes after WNDR payload");
  return table;
}

VectorTable read_vector_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_vector_table(bytes);
}

}  // namespace wander
