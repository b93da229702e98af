#include "slicereduce/resample.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "slicereduce/error.hpp"

namespace slicereduce {

namespace {

double sinc(double x) {
  if (x == 0.0) return 1.0;
  x *= std::numbers::pi;
  return std::sin(x) / x;
}

// Runtime-dispatched; no FMA variant so every target rounds identically.
#if defined(__GNUC__) && defined(__x86_64__) && !defined(__clang__)
__attribute__((target_clones("avx2", "default")))
#endif
void accumulate_row(double *dst, const std::uint8_t *src, double w, int n) {
  for (int x = 0; x < n; ++x) dst[x] += w * static_cast<double>(src[x]);
}

}  // namespace

double lanczos3(double x) {
  if (-3.0 <= x && x < 3.0) return sinc(x) * sinc(x / 3.0);
  return 0.0;
}

ResampleTaps lanczos_taps(int in_size, int out_size) {
  if (in_size < 1 || out_size < 1) throw Error(ErrorCode::InvalidArgument, "resample sizes must be positive");

  const double scale = static_cast<double>(in_size) / out_size;
  const double filterscale = std::max(scale, 1.0);
  const double support = 3.0 * filterscale;
  const double inv_filterscale = 1.0 / filterscale;

  ResampleTaps taps;
  taps.stride = static_cast<int>(std::ceil(support)) * 2 + 1;
  taps.first.resize(out_size);
  taps.count.resize(out_size);
  taps.weights.assign(static_cast<std::size_t>(out_size) * taps.stride, 0.0);

  for (int o = 0; o < out_size; ++o) {
    const double center = (o + 0.5) * scale;
    const int lo = std::max(static_cast<int>(center - support + 0.5), 0);
    const int hi = std::min(static_cast<int>(center + support + 0.5), in_size);
    const int n = hi - lo;
    double *w = taps.weights.data() + static_cast<std::size_t>(o) * taps.stride;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      w[i] = lanczos3((i + lo - center + 0.5) * inv_filterscale);
      total += w[i];
    }
    if (total != 0.0) {
      for (int i = 0; i < n; ++i) w[i] /= total;
    }
    taps.first[o] = lo;
    taps.count[o] = n;
  }
  return taps;
}

SliceImage resize_lanczos(const SliceImage &image, int out_width, int out_height) {
  const int in_w = image.width();
  const int in_h = image.height();
  const auto src = image.pixels();

  // Vertical pass first: out_height full-width rows accumulated from
  // contiguous input rows.
  std::vector<double> rows(static_cast<std::size_t>(out_height) * in_w, 0.0);
  if (in_h == out_height) {
    std::copy(src.begin(), src.end(), rows.begin());
  } else {
    const auto taps = lanczos_taps(in_h, out_height);
    for (int oy = 0; oy < out_height; ++oy) {
      double *dst = rows.data() + static_cast<std::size_t>(oy) * in_w;
      const double *w = taps.weights.data() + static_cast<std::size_t>(oy) * taps.stride;
      for (int k = 0; k < taps.count[oy]; ++k) {
        accumulate_row(dst, src.data() + static_cast<std::size_t>(taps.first[oy] + k) * in_w, w[k], in_w);
      }
    }
  }

  std::vector<std::uint8_t> out(static_cast<std::size_t>(out_width) * out_height);
  auto store = [&](std::size_t i, double v) {
    const double r = std::floor(v + 0.5);
    out[i] = static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
  };
  if (in_w == out_width) {
    for (std::size_t i = 0; i < out.size(); ++i) store(i, rows[i]);
  } else {
    const auto taps = lanczos_taps(in_w, out_width);
    for (int oy = 0; oy < out_height; ++oy) {
      const double *line = rows.data() + static_cast<std::size_t>(oy) * in_w;
      for (int ox = 0; ox < out_width; ++ox) {
        const double *w = taps.weights.data() + static_cast<std::size_t>(ox) * taps.stride;
        double acc = 0.0;
        for (int k = 0; k < taps.count[ox]; ++k) acc += w[k] * line[taps.first[ox] + k];
        store(static_cast<std::size_t>(oy) * out_width + ox, acc);
      }
    }
  }
  return SliceImage(out_width, out_height, std::move(out), image.source_bit_depth());
}

}  // namespace slicereduce
