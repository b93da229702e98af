#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "slicereduce/types.hpp"

namespace slicereduce {

struct SynthOptions {
  int volumes = 2;
  int slices = 8;      // maximum slices per volume
  int min_slices = 0;  // 0: every volume has exactly `slices`
  int width = 64;
  int height = 64;
  std::uint64_t seed = 0;
  int bit_depth = 8;   // 16 writes CT-like stored values with intercept -1024
  double noise = 6.0;  // peak uniform noise, gray levels (8-bit scale)
};

// Writes <out>/manifest.jsonl plus one PNG per slice. Each volume is a
// smooth gradient with drifting blobs plus uniform noise; the drift speed
// varies along the volume so some neighbouring slices are near duplicates.
// Output depends only on the options (no wall-clock seeding).
std::vector<SliceRef> synth_corpus(const std::filesystem::path &out_dir, const SynthOptions &options);

// Deterministic generator used by synth and tests: splitmix64 stream with
// portable conversions (no std distributions, whose output is unspecified).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  double uniform();                        // [0, 1)
  int uniform_int(int lo, int hi);         // [lo, hi]

 private:
  std::uint64_t state_;
};

}  // namespace slicereduce
