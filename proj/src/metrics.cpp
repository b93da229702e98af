#include "slicereduce/metrics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>

#include "slicereduce/error.hpp"
#include "slicereduce/resample.hpp"

namespace slicereduce {

std::string DHash64::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(bits));
  return buf;
}

DHash64 parse_dhash_hex(const std::string &hex) {
  if (hex.size() != 16 || hex.find_first_not_of("0123456789abcdefABCDEF") != std::string::npos) {
    throw Error(ErrorCode::ParseError, "expected 16 hex digits, got \"" + hex + "\"");
  }
  return DHash64{std::stoull(hex, nullptr, 16)};
}

namespace {

void require_same_size(const SliceImage &x, const SliceImage &y) {
  if (x.width() != y.width() || x.height() != y.height()) {
    throw Error(ErrorCode::DimensionMismatch, std::to_string(x.width()) + "x" + std::to_string(x.height()) +
                                                  " vs " + std::to_string(y.width()) + "x" +
                                                  std::to_string(y.height()));
  }
}

std::vector<double> gaussian_kernel(int size, double sigma) {
  std::vector<double> g(size);
  const double c = (size - 1) / 2.0;
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    g[i] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
    total += g[i];
  }
  for (auto &v : g) v /= total;
  return g;
}

}  // namespace

// ---------------------------------------------------------------------------
// SSIM

double ssim(const SliceImage &x, const SliceImage &y, const SsimParams &p) {
  require_same_size(x, y);
  if (p.window < 1 || p.window % 2 == 0) throw Error(ErrorCode::InvalidArgument, "SSIM window must be odd");
  if (!(p.k1 > 0.0) || !(p.k2 > 0.0) || !(p.sigma > 0.0) || !(p.dynamic_range > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "SSIM constants must be positive");
  }
  const int w = x.width();
  const int h = x.height();
  const int win = p.window;
  if (w < win || h < win) {
    throw Error(ErrorCode::ImageTooSmall, std::to_string(w) + "x" + std::to_string(h) + " is smaller than the " +
                                              std::to_string(win) + "x" + std::to_string(win) + " window");
  }

  const auto g = gaussian_kernel(win, p.sigma);
  const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
  const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
  const int vw = w - win + 1;
  const int vh = h - win + 1;
  const auto px = x.pixels();
  const auto py = y.pixels();

  // Horizontal pass over every row for the five moments, then a vertical
  // pass over valid rows that folds straight into the SSIM sum.
  const std::size_t plane = static_cast<std::size_t>(h) * vw;
  std::vector<double> hx(plane), hy(plane), hxx(plane), hyy(plane), hxy(plane);
  for (int r = 0; r < h; ++r) {
    const std::uint8_t *rx = px.data() + static_cast<std::size_t>(r) * w;
    const std::uint8_t *ry = py.data() + static_cast<std::size_t>(r) * w;
    const std::size_t base = static_cast<std::size_t>(r) * vw;
    for (int c = 0; c < vw; ++c) {
      double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
      for (int k = 0; k < win; ++k) {
        const double a = rx[c + k];
        const double b = ry[c + k];
        const double gk = g[k];
        sx += gk * a;
        sy += gk * b;
        sxx += gk * (a * a);
        syy += gk * (b * b);
        sxy += gk * (a * b);
      }
      hx[base + c] = sx;
      hy[base + c] = sy;
      hxx[base + c] = sxx;
      hyy[base + c] = syy;
      hxy[base + c] = sxy;
    }
  }

  double total = 0.0;
  std::vector<double> mx(vw), my(vw), mxx(vw), myy(vw), mxy(vw);
  for (int r = 0; r < vh; ++r) {
    std::fill(mx.begin(), mx.end(), 0.0);
    std::fill(my.begin(), my.end(), 0.0);
    std::fill(mxx.begin(), mxx.end(), 0.0);
    std::fill(myy.begin(), myy.end(), 0.0);
    std::fill(mxy.begin(), mxy.end(), 0.0);
    for (int k = 0; k < win; ++k) {
      const std::size_t base = static_cast<std::size_t>(r + k) * vw;
      const double gk = g[k];
      for (int c = 0; c < vw; ++c) {
        mx[c] += gk * hx[base + c];
        my[c] += gk * hy[base + c];
        mxx[c] += gk * hxx[base + c];
        myy[c] += gk * hyy[base + c];
        mxy[c] += gk * hxy[base + c];
      }
    }
    double row_sum = 0.0;
    for (int c = 0; c < vw; ++c) {
      const double mu_x = mx[c];
      const double mu_y = my[c];
      const double var_x = mxx[c] - mu_x * mu_x;
      const double var_y = myy[c] - mu_y * mu_y;
      const double cov = mxy[c] - mu_x * mu_y;
      const double num = (2.0 * (mu_x * mu_y) + c1) * (2.0 * cov + c2);
      const double den = ((mu_x * mu_x + mu_y * mu_y) + c1) * ((var_x + var_y) + c2);
      row_sum += num / den;
    }
    total += row_sum;
  }
  return total / (static_cast<double>(vw) * vh);
}

// ---------------------------------------------------------------------------
// Normalised mutual information

namespace {

double plogp(std::uint32_t c, double n) {
  if (c == 0) return 0.0;
  const double p = c / n;
  return p * std::log2(p);
}

double entropy_bits(const std::vector<std::uint32_t> &counts, double n) {
  double h = 0.0;
  for (auto c : counts) h -= plogp(c, n);
  return h;
}

// Visits cell (a, b) together with (b, a) so that transposing the table,
// i.e. swapping the images, gives a bit-identical sum.
double joint_entropy_bits(const std::vector<std::uint32_t> &joint, std::size_t bins, double n) {
  double h = 0.0;
  for (std::size_t a = 0; a < bins; ++a) {
    h -= plogp(joint[a * bins + a], n);
    for (std::size_t b = a + 1; b < bins; ++b) h -= plogp(joint[a * bins + b], n) + plogp(joint[b * bins + a], n);
  }
  return h;
}

}  // namespace

HistogramFeatures histogram_features(const SliceImage &image, int bins) {
  if (bins < 2 || bins > 256) throw Error(ErrorCode::InvalidArgument, "bins must be in [2, 256]");
  HistogramFeatures f;
  f.bins = bins;
  f.width = image.width();
  f.height = image.height();
  const auto px = image.pixels();
  f.bin_of_pixel.resize(px.size());

  std::vector<std::uint16_t> lut(256);
  for (int v = 0; v < 256; ++v) lut[v] = static_cast<std::uint16_t>(std::min(v * bins / 255, bins - 1));

  std::vector<std::uint32_t> counts(static_cast<std::size_t>(bins), 0);
  for (std::size_t i = 0; i < px.size(); ++i) {
    const auto b = lut[px[i]];
    f.bin_of_pixel[i] = b;
    ++counts[b];
  }
  f.entropy = entropy_bits(counts, static_cast<double>(px.size()));
  return f;
}

double nmi(const HistogramFeatures &x, const HistogramFeatures &y) {
  if (x.width != y.width || x.height != y.height) {
    throw Error(ErrorCode::DimensionMismatch, std::to_string(x.width) + "x" + std::to_string(x.height) + " vs " +
                                                  std::to_string(y.width) + "x" + std::to_string(y.height));
  }
  if (x.bins != y.bins) throw Error(ErrorCode::InvalidArgument, "histogram bin counts differ");
  const std::size_t bins = static_cast<std::size_t>(x.bins);
  std::vector<std::uint32_t> joint(bins * bins, 0);
  const std::size_t n = x.bin_of_pixel.size();
  for (std::size_t i = 0; i < n; ++i) ++joint[x.bin_of_pixel[i] * bins + y.bin_of_pixel[i]];
  const double joint_entropy = joint_entropy_bits(joint, bins, static_cast<double>(n));
  if (joint_entropy <= 0.0) {
    throw Error(ErrorCode::DegenerateHistogram, "both images are constant; joint entropy is zero");
  }
  const double v = (x.entropy + y.entropy) / joint_entropy;
  return std::clamp(v, 1.0, 2.0);
}

double nmi(const SliceImage &x, const SliceImage &y, int bins) {
  require_same_size(x, y);
  return nmi(histogram_features(x, bins), histogram_features(y, bins));
}

// ---------------------------------------------------------------------------
// Difference hash

DHash64 dhash(const SliceImage &image) {
  const auto small = resize_lanczos(image, 9, 8);
  std::uint64_t bits = 0;
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) {
      if (small.at(c + 1, r) > small.at(c, r)) bits |= std::uint64_t{1} << (r * 8 + c);
    }
  }
  return DHash64{bits};
}

int hamming(DHash64 a, DHash64 b) { return std::popcount(a.bits ^ b.bits); }

// ---------------------------------------------------------------------------
// Cosine

namespace {

template <typename T>
double cosine_impl(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size() || a.empty()) {
    throw Error(ErrorCode::DimensionMismatch,
                "vector lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i];
    const double y = b[i];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::ZeroVector, "cosine of a zero vector is undefined");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

}  // namespace

double cosine(std::span<const double> a, std::span<const double> b) { return cosine_impl(a, b); }
double cosine(std::span<const float> a, std::span<const float> b) { return cosine_impl(a, b); }

EmbeddingFeatures embedding_features(std::span<const float> v) {
  EmbeddingFeatures f;
  f.values.assign(v.begin(), v.end());
  double sq = 0.0;
  for (double x : f.values) sq += x * x;
  if (sq == 0.0) throw Error(ErrorCode::ZeroVector, "cosine of a zero vector is undefined");
  f.norm = std::sqrt(sq);
  return f;
}

double cosine(const EmbeddingFeatures &a, const EmbeddingFeatures &b) {
  if (a.values.size() != b.values.size() || a.values.empty()) {
    throw Error(ErrorCode::DimensionMismatch, "vector lengths " + std::to_string(a.values.size()) + " and " +
                                                  std::to_string(b.values.size()));
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) dot += a.values[i] * b.values[i];
  return std::clamp(dot / (a.norm * b.norm), -1.0, 1.0);
}

}  // namespace slicereduce
