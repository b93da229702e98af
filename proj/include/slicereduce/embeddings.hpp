#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "slicereduce/types.hpp"

namespace slicereduce {

// Slice embeddings keyed by "volume_id/slice_index", backing the DeepNet
// metric. Immutable once loaded.
//
// SSEB v1 layout, little-endian:
//   "SSEB" | u32 version (1) | u32 dim | u64 count
//   count x ( u16 key_length | key bytes (UTF-8) | dim x f32 )
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::uint32_t dim);

  // Validates dimension, non-zero norm and key uniqueness.
  void add(const std::string &key, std::span<const float> vector);

  std::uint32_t dim() const { return dim_; }
  std::size_t size() const { return keys_.size(); }
  const std::vector<std::string> &keys() const { return keys_; }  // insertion order
  bool contains(const std::string &key) const { return index_.count(key) != 0; }
  std::span<const float> at(const std::string &key) const;  // MissingEmbedding if absent

 private:
  std::uint32_t dim_ = 0;
  std::vector<std::string> keys_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<float> data_;
};

inline constexpr std::uint32_t kSsebVersion = 1;

EmbeddingTable load_embeddings(const std::filesystem::path &path);
EmbeddingTable parse_embeddings(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> serialize_embeddings(const EmbeddingTable &table);
void write_embeddings(const std::filesystem::path &path, const EmbeddingTable &table);

std::span<const float> lookup(const EmbeddingTable &table, const SliceRef &ref);

}  // namespace slicereduce
