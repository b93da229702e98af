#include "slicereduce/embeddings.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>

#include "slicereduce/error.hpp"

namespace slicereduce {

static_assert(std::endian::native == std::endian::little, "SSEB I/O assumes a little-endian host");
static_assert(sizeof(float) == 4);

EmbeddingTable::EmbeddingTable(std::uint32_t dim) : dim_(dim) {
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "embedding dimension must be at least 1");
}

void EmbeddingTable::add(const std::string &key, std::span<const float> vector) {
  if (vector.size() != dim_) {
    throw Error(ErrorCode::DimensionMismatch, "embedding " + key + " has " + std::to_string(vector.size()) +
                                                  " values, table dimension is " + std::to_string(dim_));
  }
  if (index_.count(key)) throw Error(ErrorCode::DuplicateKey, "embedding key " + key + " appears twice");
  if (std::all_of(vector.begin(), vector.end(), [](float v) { return v == 0.0f; })) {
    throw Error(ErrorCode::ZeroVector, "embedding " + key + " is all zeros");
  }
  if (!std::all_of(vector.begin(), vector.end(), [](float v) { return std::isfinite(v); })) {
    throw Error(ErrorCode::ParseError, "embedding " + key + " contains a non-finite value");
  }
  index_.emplace(key, keys_.size());
  keys_.push_back(key);
  data_.insert(data_.end(), vector.begin(), vector.end());
}

std::span<const float> EmbeddingTable::at(const std::string &key) const {
  auto it = index_.find(key);
  if (it == index_.end()) {
    throw Error(ErrorCode::MissingEmbedding, "no embedding for " + key + " (exporter and manifest out of sync?)");
  }
  return {data_.data() + it->second * dim_, dim_};
}

std::span<const float> lookup(const EmbeddingTable &table, const SliceRef &ref) { return table.at(slice_key(ref)); }

namespace {

constexpr std::size_t kHeaderSize = 4 + 4 + 4 + 8;

template <typename T>
T read_le(const std::uint8_t *p) {
  T v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

template <typename T>
void append_le(std::vector<std::uint8_t> &out, T v) {
  const auto *p = reinterpret_cast<const std::uint8_t *>(&v);
  out.insert(out.end(), p, p + sizeof v);
}

bool is_slice_key(std::string_view key) {
  const auto slash = key.rfind('/');
  if (slash == std::string_view::npos || slash == 0 || slash + 1 == key.size()) return false;
  return std::all_of(key.begin() + static_cast<std::ptrdiff_t>(slash) + 1, key.end(),
                     [](char c) { return c >= '0' && c <= '9'; });
}

// A record header is plausible at offset if its key fits in the buffer and
// reads as a slice key. Used only to diagnose misaligned files.
bool plausible_record_at(std::span<const std::uint8_t> bytes, std::size_t offset) {
  if (offset + 2 > bytes.size()) return false;
  const auto len = read_le<std::uint16_t>(bytes.data() + offset);
  if (len == 0 || offset + 2 + len > bytes.size()) return false;
  return is_slice_key({reinterpret_cast<const char *>(bytes.data() + offset + 2), len});
}

// Finds the float count of the record whose vector starts at vec_start,
// assuming the following record (if any) is well formed.
std::optional<std::size_t> infer_vector_length(std::span<const std::uint8_t> bytes, std::size_t vec_start,
                                               bool last_record, std::uint32_t dim) {
  const std::size_t remaining = bytes.size() - vec_start;
  if (last_record) {
    if (remaining % 4 == 0 && remaining > 0) return remaining / 4;
    return std::nullopt;
  }
  const std::size_t max_floats = std::min<std::size_t>(remaining / 4, std::size_t{2} * dim + 16);
  for (std::size_t d = 1; d <= max_floats; ++d) {
    if (d != dim && plausible_record_at(bytes, vec_start + 4 * d)) return d;
  }
  return std::nullopt;
}

}  // namespace

EmbeddingTable parse_embeddings(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw Error(ErrorCode::TruncatedFile, "file shorter than the SSEB magic");
  if (std::memcmp(bytes.data(), "SSEB", 4) != 0) throw Error(ErrorCode::BadMagic, "missing SSEB magic bytes");
  if (bytes.size() < kHeaderSize) throw Error(ErrorCode::TruncatedFile, "incomplete SSEB header");
  const auto version = read_le<std::uint32_t>(bytes.data() + 4);
  if (version != kSsebVersion) {
    throw Error(ErrorCode::UnsupportedVersion, "SSEB version " + std::to_string(version) + " is not supported");
  }
  const auto dim = read_le<std::uint32_t>(bytes.data() + 8);
  const auto count = read_le<std::uint64_t>(bytes.data() + 12);
  if (dim == 0) throw Error(ErrorCode::DimensionMismatch, "SSEB header declares dimension 0");

  EmbeddingTable table(dim);
  const std::size_t vec_bytes = static_cast<std::size_t>(dim) * 4;
  std::size_t pos = kHeaderSize;
  std::vector<float> vec(dim);

  for (std::uint64_t i = 0; i < count; ++i) {
    const bool last = i + 1 == count;
    const std::string rec = "record " + std::to_string(i);
    if (pos + 2 > bytes.size()) throw Error(ErrorCode::TruncatedFile, rec + ": missing key length");
    const auto key_len = read_le<std::uint16_t>(bytes.data() + pos);
    if (pos + 2 + key_len > bytes.size()) throw Error(ErrorCode::TruncatedFile, rec + ": key runs past end of file");
    std::string key(reinterpret_cast<const char *>(bytes.data() + pos + 2), key_len);
    if (!is_slice_key(key)) {
      throw Error(ErrorCode::ParseError, rec + ": key \"" + key + "\" is not volume_id/slice_index");
    }
    const std::size_t vec_start = pos + 2 + key_len;

    const bool fits = vec_start + vec_bytes <= bytes.size();
    const bool next_ok = last ? vec_start + vec_bytes == bytes.size()
                              : fits && plausible_record_at(bytes, vec_start + vec_bytes);
    if (!fits || !next_ok) {
      if (auto d = infer_vector_length(bytes, vec_start, last, dim)) {
        throw Error(ErrorCode::DimensionMismatch, rec + " (" + key + ") holds " + std::to_string(*d) +
                                                      " values, header declares " + std::to_string(dim));
      }
      if (!fits) throw Error(ErrorCode::TruncatedFile, rec + " (" + key + "): vector runs past end of file");
      if (vec_start + vec_bytes == bytes.size()) {
        throw Error(ErrorCode::TruncatedFile, "header declares " + std::to_string(count) + " records, file ends after " +
                                                  std::to_string(i + 1));
      }
      if (last) throw Error(ErrorCode::ParseError, "trailing bytes after the last record");
      throw Error(ErrorCode::ParseError, rec + " (" + key + "): next record header is malformed");
    }

    std::memcpy(vec.data(), bytes.data() + vec_start, vec_bytes);
    table.add(key, vec);
    pos = vec_start + vec_bytes;
  }
  if (pos != bytes.size()) throw Error(ErrorCode::ParseError, "trailing bytes after the last record");
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::IoError, "failed reading " + path.string());
  return parse_embeddings(bytes);
}

std::vector<std::uint8_t> serialize_embeddings(const EmbeddingTable &table) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), {'S', 'S', 'E', 'B'});
  append_le<std::uint32_t>(out, kSsebVersion);
  append_le<std::uint32_t>(out, table.dim());
  append_le<std::uint64_t>(out, table.size());
  for (const auto &key : table.keys()) {
    if (key.size() > 0xFFFF) throw Error(ErrorCode::InvalidArgument, "embedding key longer than 65535 bytes");
    append_le<std::uint16_t>(out, static_cast<std::uint16_t>(key.size()));
    out.insert(out.end(), key.begin(), key.end());
    const auto vec = table.at(key);
    const auto *p = reinterpret_cast<const std::uint8_t *>(vec.data());
    out.insert(out.end(), p, p + vec.size_bytes());
  }
  return out;
}

void write_embeddings(const std::filesystem::path &path, const EmbeddingTable &table) {
  const auto bytes = serialize_embeddings(table);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot create " + path.string());
  out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

}  // namespace slicereduce
