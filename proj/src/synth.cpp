#include "slicereduce/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "slicereduce/error.hpp"
#include "slicereduce/manifest.hpp"
#include "slicereduce/png_io.hpp"

namespace slicereduce {

namespace fs = std::filesystem;

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

int SplitMix64::uniform_int(int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(next() % span);
}

namespace {

struct Blob {
  double x, y, dx, dy, radius, amplitude;
};

struct VolumeModel {
  double angle, angle_rate, contrast, offset;
  std::vector<Blob> blobs;
  std::vector<double> speed;  // per-slice motion multiplier
};

VolumeModel make_model(SplitMix64 &rng, int slices) {
  VolumeModel v;
  v.angle = rng.uniform() * 2.0 * std::numbers::pi;
  v.angle_rate = (rng.uniform() - 0.5) * 0.2;
  v.contrast = 0.3 + 0.4 * rng.uniform();
  v.offset = 0.1 + 0.3 * rng.uniform();
  const int blobs = rng.uniform_int(2, 4);
  for (int i = 0; i < blobs; ++i) {
    Blob b;
    b.x = rng.uniform();
    b.y = rng.uniform();
    b.dx = (rng.uniform() - 0.5) * 0.04;
    b.dy = (rng.uniform() - 0.5) * 0.04;
    b.radius = 0.05 + 0.15 * rng.uniform();
    b.amplitude = (rng.uniform() - 0.3) * 0.6;
    v.blobs.push_back(b);
  }
  // Runs of near-still slices alternate with faster motion.
  v.speed.resize(static_cast<std::size_t>(slices));
  double current = rng.uniform();
  for (auto &s : v.speed) {
    if (rng.uniform() < 0.2) current = rng.uniform() < 0.4 ? 0.05 * rng.uniform() : 0.5 + 1.5 * rng.uniform();
    s = current;
  }
  return v;
}

}  // namespace

std::vector<SliceRef> synth_corpus(const fs::path &out_dir, const SynthOptions &o) {
  if (o.volumes < 1 || o.slices < 1 || o.width < 1 || o.height < 1 || o.min_slices < 0 || o.min_slices > o.slices ||
      (o.bit_depth != 8 && o.bit_depth != 16) || o.noise < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "invalid synthetic corpus options");
  }
  fs::create_directories(out_dir);

  SplitMix64 rng(o.seed);
  std::vector<SliceRef> refs;
  const int w = o.width;
  const int h = o.height;
  std::vector<double> field(static_cast<std::size_t>(w) * h);
  std::vector<double> gx(static_cast<std::size_t>(w)), gy(static_cast<std::size_t>(h));

  for (int vol = 0; vol < o.volumes; ++vol) {
    char vid[32];
    std::snprintf(vid, sizeof vid, "vol%03d", vol);
    const int m = o.min_slices > 0 ? rng.uniform_int(o.min_slices, o.slices) : o.slices;
    auto model = make_model(rng, m);
    fs::create_directories(out_dir / vid);

    double t = 0.0;
    for (int s = 0; s < m; ++s) {
      t += model.speed[static_cast<std::size_t>(s)];
      const double angle = model.angle + model.angle_rate * t;
      const double ca = std::cos(angle), sa = std::sin(angle);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double u = (x + 0.5) / w - 0.5, v = (y + 0.5) / h - 0.5;
          field[static_cast<std::size_t>(y) * w + x] = model.offset + model.contrast * (u * ca + v * sa + 0.5);
        }
      }
      // Gaussian blobs factor into row and column terms.
      for (const auto &b : model.blobs) {
        const double bx = b.x + b.dx * t, by = b.y + b.dy * t;
        const double inv = 1.0 / (2.0 * b.radius * b.radius);
        for (int x = 0; x < w; ++x) {
          const double d = (x + 0.5) / w - bx;
          gx[static_cast<std::size_t>(x)] = std::exp(-d * d * inv);
        }
        for (int y = 0; y < h; ++y) {
          const double d = (y + 0.5) / h - by;
          gy[static_cast<std::size_t>(y)] = b.amplitude * std::exp(-d * d * inv);
        }
        for (int y = 0; y < h; ++y) {
          for (int x = 0; x < w; ++x) field[static_cast<std::size_t>(y) * w + x] += gy[y] * gx[x];
        }
      }

      char name[32];
      std::snprintf(name, sizeof name, "slice_%04d.png", s);
      const fs::path rel = fs::path(vid) / name;
      SliceRef ref{vid, s, rel.generic_string(), 1.0, 0.0};

      if (o.bit_depth == 8) {
        std::vector<std::uint8_t> px(field.size());
        for (std::size_t i = 0; i < field.size(); ++i) {
          const double noise = (rng.uniform() * 2.0 - 1.0) * o.noise;
          px[i] = static_cast<std::uint8_t>(std::clamp(std::floor(field[i] * 255.0 + noise + 0.5), 0.0, 255.0));
        }
        write_gray_png(out_dir / rel, w, h, px);
      } else {
        // Field 0..1 spans -1000..1500 HU; stored = HU + 1024.
        std::vector<std::uint16_t> px(field.size());
        for (std::size_t i = 0; i < field.size(); ++i) {
          const double noise = (rng.uniform() * 2.0 - 1.0) * o.noise * (2500.0 / 255.0);
          const double hu = -1000.0 + 2500.0 * field[i] + noise;
          px[i] = static_cast<std::uint16_t>(std::clamp(std::floor(hu + 1024.0 + 0.5), 0.0, 65535.0));
        }
        write_gray_png16(out_dir / rel, w, h, px);
        ref.rescale_intercept = -1024.0;
      }
      refs.push_back(std::move(ref));
    }
  }
  write_manifest(out_dir / "manifest.jsonl", refs);
  return refs;
}

}  // namespace slicereduce
