#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace slicereduce {

struct SliceRef {
  std::string volume_id;
  int slice_index = 0;
  std::string path;
  double rescale_slope = 1.0;
  double rescale_intercept = 0.0;

  bool operator==(const SliceRef &) const = default;
};

// Manifest key used to join slices with external tables: "volume_id/slice_index".
std::string slice_key(const SliceRef &ref);
std::string slice_key(const std::string &volume_id, int slice_index);

// Slices of one scan, sorted by slice_index with indices exactly 0..m-1.
struct VolumeSeries {
  std::string volume_id;
  std::vector<SliceRef> slices;

  int size() const { return static_cast<int>(slices.size()); }
};

// Windowed 8-bit grayscale raster. All similarity metrics consume this type.
class SliceImage {
 public:
  SliceImage() = default;
  SliceImage(int width, int height, std::vector<std::uint8_t> pixels, int source_bit_depth = 8);

  int width() const { return width_; }
  int height() const { return height_; }
  int source_bit_depth() const { return source_bit_depth_; }
  std::span<const std::uint8_t> pixels() const { return pixels_; }
  std::uint8_t at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  bool empty() const { return pixels_.empty(); }

 private:
  int width_ = 0;
  int height_ = 0;
  int source_bit_depth_ = 8;
  std::vector<std::uint8_t> pixels_;
};

// One intra-volume comparison. For Hash the score is a Hamming distance
// (smaller = more similar); for every other metric larger = more similar.
struct PairScore {
  int a = 0;
  int b = 0;
  double score = 0.0;

  bool operator==(const PairScore &) const = default;
};

namespace method {
struct EveryN {
  int n = 1;
};
struct Ssim {};
struct Mi {
  int bins = 256;
};
struct DeepNet {
  std::filesystem::path embeddings;
};
struct Hash {};
}  // namespace method

using Method = std::variant<method::EveryN, method::Ssim, method::Mi, method::DeepNet, method::Hash>;

std::string method_name(const Method &m);

// True when a smaller score means "more similar" (Hamming distance).
bool smaller_is_more_similar(const Method &m);

namespace mode {
struct Fraction {
  double f = 1.0;
};
struct Count {
  int k = 1;
};
struct Threshold {
  double t = 0.0;
};
}  // namespace mode

using Mode = std::variant<mode::Fraction, mode::Count, mode::Threshold>;

std::string mode_name(const Mode &m);
double mode_value(const Mode &m);

struct Removal {
  int index = 0;    // slice dropped
  int partner = 0;  // still-kept slice it was too similar to
  double score = 0.0;

  bool operator==(const Removal &) const = default;
};

struct VolumePlan {
  std::string volume_id;
  int slice_count = 0;
  std::vector<int> kept;        // ascending
  std::vector<int> removed;     // ascending
  std::vector<Removal> removals;  // walk order; empty for EveryN

  bool operator==(const VolumePlan &) const = default;
};

struct ReductionPlan {
  Method method;
  Mode mode;
  std::vector<VolumePlan> volumes;  // ordered by volume_id
  double scoring_seconds = 0.0;
  double selection_seconds = 0.0;
  std::string tool_version;
};

std::string tool_version();

}  // namespace slicereduce
