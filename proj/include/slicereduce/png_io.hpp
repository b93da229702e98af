#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace slicereduce {

// Stored sample values of a single-channel PNG, widened to 16 bits.
struct GrayRaster {
  int width = 0;
  int height = 0;
  int bit_depth = 8;  // 8 or 16
  std::vector<std::uint16_t> values;
};

// Auto decodes plain 8/16-bit non-interlaced files with libdeflate and
// hands everything else to libpng. Libpng forces the libpng route.
enum class PngDecoder { Auto, Libpng };

// Accepts 1/2/4/8/16-bit grayscale without alpha; anything else is
// UnsupportedFormat. Sub-byte depths are widened to 8 bits unscaled.
GrayRaster read_gray_png(const std::filesystem::path &path, PngDecoder decoder = PngDecoder::Auto);

enum class PngRowFilter { Adaptive, None, Sub, Up, Average, Paeth };

void write_gray_png(const std::filesystem::path &path, int width, int height, std::span<const std::uint8_t> pixels,
                    PngRowFilter filter = PngRowFilter::Adaptive);
void write_gray_png16(const std::filesystem::path &path, int width, int height,
                      std::span<const std::uint16_t> values, PngRowFilter filter = PngRowFilter::Adaptive);

}  // namespace slicereduce
