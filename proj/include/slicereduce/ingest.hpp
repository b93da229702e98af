#pragma once

#include <filesystem>
#include <optional>

#include "slicereduce/png_io.hpp"
#include "slicereduce/types.hpp"

namespace slicereduce {

// Display window in physical units (HU for CT), e.g. {35, 80} for brain.
struct WindowSpec {
  double center = 0.0;
  double width = 1.0;
};

WindowSpec make_window(double center, double width);  // throws InvalidArgument unless width > 0

// Stored raster plus the affine map to physical values:
// physical = stored * slope + intercept.
struct RawSlice {
  GrayRaster raster;
  double rescale_slope = 1.0;
  double rescale_intercept = 0.0;

  double physical(std::size_t i) const { return raster.values[i] * rescale_slope + rescale_intercept; }
};

// Reads the PNG at image_path and attaches the rescale parameters of ref.
RawSlice decode_slice(const std::filesystem::path &image_path, const SliceRef &ref);

// With a window: clamp to [center - width/2, center + width/2] and map
// linearly to [0,255], rounding half up. Without: per-slice min-max
// stretch; constant slices become all zeros.
SliceImage apply_window(const RawSlice &raw, const std::optional<WindowSpec> &window);

// Maps one physical value through the window; exposed for tests and LUTs.
std::uint8_t window_value(double physical, const WindowSpec &window);

SliceImage load_slice_image(const std::filesystem::path &manifest_path, const SliceRef &ref,
                            const std::optional<WindowSpec> &window);

}  // namespace slicereduce
