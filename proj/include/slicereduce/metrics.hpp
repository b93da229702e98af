#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "slicereduce/types.hpp"

namespace slicereduce {

// 64-bit difference hash. Row r (top to bottom) and comparison c (left to
// right) of the 9x8 reduced image sit at bit r*8 + c, counting from the
// least significant bit. A bit is set iff the right neighbour is strictly
// brighter.
struct DHash64 {
  std::uint64_t bits = 0;

  bool operator==(const DHash64 &) const = default;
  std::string hex() const;  // 16 lowercase hex digits, most significant first
};

DHash64 parse_dhash_hex(const std::string &hex);

struct SsimParams {
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 255.0;
  int window = 11;
  double sigma = 1.5;
};

// Mean SSIM over every fully interior window position, using Gaussian
// weighted local statistics. Requires equal dimensions of at least
// window x window.
double ssim(const SliceImage &x, const SliceImage &y, const SsimParams &params = {});

// Normalised mutual information (H(X) + H(Y)) / H(X,Y) from a bins x bins
// joint histogram with uniform bin edges over [0, 255]; lies in [1, 2].
double nmi(const SliceImage &x, const SliceImage &y, int bins = 256);

DHash64 dhash(const SliceImage &image);

int hamming(DHash64 a, DHash64 b);

// dot(a, b) / (|a| |b|), clamped to [-1, 1].
double cosine(std::span<const double> a, std::span<const double> b);
double cosine(std::span<const float> a, std::span<const float> b);

// Per-slice work hoisted out of the pairwise loops. The pairwise functions
// below return exactly what the one-shot metrics above return.
struct HistogramFeatures {
  int bins = 0;
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> bin_of_pixel;
  double entropy = 0.0;  // bits
};

HistogramFeatures histogram_features(const SliceImage &image, int bins);
double nmi(const HistogramFeatures &x, const HistogramFeatures &y);

struct EmbeddingFeatures {
  std::vector<double> values;
  double norm = 0.0;
};

EmbeddingFeatures embedding_features(std::span<const float> v);
double cosine(const EmbeddingFeatures &a, const EmbeddingFeatures &b);

}  // namespace slicereduce
