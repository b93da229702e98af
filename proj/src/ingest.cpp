#include "slicereduce/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "slicereduce/error.hpp"
#include "slicereduce/manifest.hpp"

namespace slicereduce {

WindowSpec make_window(double center, double width) {
  if (!(width > 0.0) || !std::isfinite(width) || !std::isfinite(center)) {
    throw Error(ErrorCode::InvalidArgument, "window width must be a positive finite number");
  }
  return WindowSpec{center, width};
}

RawSlice decode_slice(const std::filesystem::path &image_path, const SliceRef &ref) {
  RawSlice raw;
  raw.raster = read_gray_png(image_path);
  raw.rescale_slope = ref.rescale_slope;
  raw.rescale_intercept = ref.rescale_intercept;
  return raw;
}

namespace {

std::uint8_t round_to_byte(double v) {
  const double r = std::floor(v + 0.5);
  if (r <= 0.0) return 0;
  if (r >= 255.0) return 255;
  return static_cast<std::uint8_t>(r);
}

}  // namespace

std::uint8_t window_value(double physical, const WindowSpec &window) {
  const double lo = window.center - window.width / 2.0;
  const double hi = window.center + window.width / 2.0;
  const double clamped = std::clamp(physical, lo, hi);
  return round_to_byte((clamped - lo) / window.width * 255.0);
}

SliceImage apply_window(const RawSlice &raw, const std::optional<WindowSpec> &window) {
  const auto &values = raw.raster.values;
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "empty raster");

  // Stored values are integers in a narrow range, so a lookup table over
  // [min, max] of the stored samples evaluates the map once per level.
  std::uint16_t vmin = values[0];
  std::uint16_t vmax = values[0];
  for (const auto v : values) {
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  std::vector<std::uint8_t> lut(static_cast<std::size_t>(vmax - vmin) + 1, 0);

  auto phys = [&](std::uint16_t v) { return v * raw.rescale_slope + raw.rescale_intercept; };
  if (window) {
    for (std::size_t i = 0; i < lut.size(); ++i) {
      lut[i] = window_value(phys(static_cast<std::uint16_t>(vmin + i)), *window);
    }
  } else if (vmax != vmin && raw.rescale_slope != 0.0) {
    // The affine map may be decreasing (negative slope), so take physical
    // extremes from both ends.
    const double p0 = phys(vmin);
    const double p1 = phys(vmax);
    const double lo = std::min(p0, p1);
    const double span = std::max(p0, p1) - lo;
    for (std::size_t i = 0; i < lut.size(); ++i) {
      lut[i] = round_to_byte((phys(static_cast<std::uint16_t>(vmin + i)) - lo) / span * 255.0);
    }
  }

  std::vector<std::uint8_t> pixels(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) pixels[i] = lut[values[i] - vmin];
  return SliceImage(raw.raster.width, raw.raster.height, std::move(pixels), raw.raster.bit_depth);
}

SliceImage load_slice_image(const std::filesystem::path &manifest_path, const SliceRef &ref,
                            const std::optional<WindowSpec> &window) {
  return apply_window(decode_slice(resolve_slice_path(manifest_path, ref), ref), window);
}

}  // namespace slicereduce
