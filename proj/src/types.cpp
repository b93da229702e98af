#include "slicereduce/types.hpp"

#include <type_traits>

#include "slicereduce/error.hpp"

#ifndef SLICEREDUCE_VERSION
#define SLICEREDUCE_VERSION "dev"
#endif

namespace slicereduce {

std::string slice_key(const std::string &volume_id, int slice_index) {
  return volume_id + "/" + std::to_string(slice_index);
}

std::string slice_key(const SliceRef &ref) { return slice_key(ref.volume_id, ref.slice_index); }

SliceImage::SliceImage(int width, int height, std::vector<std::uint8_t> pixels, int source_bit_depth)
    : width_(width), height_(height), source_bit_depth_(source_bit_depth), pixels_(std::move(pixels)) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::InvalidArgument,
                "image dimensions must be positive, got " + std::to_string(width) + "x" + std::to_string(height));
  }
  if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorCode::DimensionMismatch, "pixel buffer holds " + std::to_string(pixels_.size()) +
                                                  " values, expected " + std::to_string(width * height));
  }
  if (source_bit_depth != 8 && source_bit_depth != 16) {
    throw Error(ErrorCode::InvalidArgument, "source bit depth must be 8 or 16");
  }
}

std::string method_name(const Method &m) {
  return std::visit(
      [](const auto &v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, method::EveryN>) return "every-n";
        if constexpr (std::is_same_v<T, method::Ssim>) return "ssim";
        if constexpr (std::is_same_v<T, method::Mi>) return "mi";
        if constexpr (std::is_same_v<T, method::DeepNet>) return "deepnet";
        if constexpr (std::is_same_v<T, method::Hash>) return "hash";
      },
      m);
}

bool smaller_is_more_similar(const Method &m) { return std::holds_alternative<method::Hash>(m); }

std::string mode_name(const Mode &m) {
  switch (m.index()) {
    case 0: return "fraction";
    case 1: return "count";
    default: return "threshold";
  }
}

double mode_value(const Mode &m) {
  return std::visit(
      [](const auto &v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, mode::Fraction>) return v.f;
        if constexpr (std::is_same_v<T, mode::Count>) return v.k;
        if constexpr (std::is_same_v<T, mode::Threshold>) return v.t;
      },
      m);
}

std::string tool_version() { return "slicereduce " SLICEREDUCE_VERSION; }

}  // namespace slicereduce
