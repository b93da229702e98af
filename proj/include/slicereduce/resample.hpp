#pragma once

#include <vector>

#include "slicereduce/types.hpp"

namespace slicereduce {

// Windowed sinc with three lobes, nonzero on [-3, 3).
double lanczos3(double x);

// Per-output-sample filter taps for resampling a line of in_size samples to
// out_size samples. When downscaling the kernel is stretched by the scale
// factor so it acts as a low-pass filter (antialiasing).
struct ResampleTaps {
  std::vector<int> first;       // first input sample per output sample
  std::vector<int> count;       // number of taps per output sample
  std::vector<double> weights;  // out_size * stride, normalised to sum 1
  int stride = 0;
};

ResampleTaps lanczos_taps(int in_size, int out_size);

// Separable Lanczos-3 resize of an 8-bit image; output samples are rounded
// half up and clamped to [0, 255].
SliceImage resize_lanczos(const SliceImage &image, int out_width, int out_height);

}  // namespace slicereduce
