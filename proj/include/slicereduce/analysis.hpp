#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slicereduce/reducer.hpp"
#include "slicereduce/types.hpp"

namespace slicereduce {

struct VolumeOverlap {
  std::string volume_id;
  std::size_t size_a = 0;
  std::size_t size_b = 0;
  std::size_t intersection = 0;
  std::size_t union_size = 0;
  double jaccard = 0.0;
  double containment_a = 0.0;  // |A n B| / |A|
  double containment_b = 0.0;  // |A n B| / |B|
};

struct OverlapReport {
  std::string method_a;
  std::string method_b;
  std::size_t size_a = 0;
  std::size_t size_b = 0;
  std::size_t intersection = 0;
  std::size_t union_size = 0;
  double jaccard = 0.0;
  double containment_a = 0.0;
  double containment_b = 0.0;
  std::vector<VolumeOverlap> volumes;
};

// Set overlap of the kept (volume_id, slice_index) pairs of two plans over
// the same manifest. Throws ManifestMismatch if the plans describe
// different volumes or slice counts.
OverlapReport overlap(const ReductionPlan &a, const ReductionPlan &b);
std::string overlap_json(const OverlapReport &report);

struct VolumeStats {
  std::string volume_id;
  std::size_t slices = 0;
  std::size_t kept = 0;
  std::size_t removed = 0;
  double kept_fraction = 0.0;
};

struct ScoreHistogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> counts;  // uniform bins over [lo, hi]
};

struct PlanStats {
  std::size_t slices = 0;
  std::size_t kept = 0;
  std::size_t removed = 0;
  double kept_fraction = 0.0;
  double removed_fraction = 0.0;
  std::vector<VolumeStats> volumes;
  std::optional<ScoreHistogram> kept_scores;
};

PlanStats stats(const ReductionPlan &plan);

// Histogram of all pairwise scores among kept slices, rescored with the
// plan's metric. Hash distances get one bin per integer 0..64; the other
// metrics use `bins` uniform bins over their value range.
ScoreHistogram kept_score_histogram(const ReductionPlan &plan, const std::filesystem::path &manifest_path,
                                    std::span<const VolumeSeries> volumes, const ReduceOptions &options,
                                    int bins = 20);

std::string stats_json(const PlanStats &s);

struct BenchRow {
  std::string method;
  std::string phase;       // decode, features, compare, select, total
  double wall_seconds = 0.0;
  double slices_per_second = 0.0;
  std::string repetition;  // "1".."n", then "min" and "median"
  std::size_t pairs = 0;
  double seconds_per_pair = 0.0;  // compare and total phases; 0 when no pairs
};

struct BenchResult {
  std::vector<BenchRow> rows;
  std::vector<ReductionPlan> plans;  // last repetition of each method
  std::vector<PhaseTimes> phases;    // last repetition of each method
};

// Times each method end to end (manifest parsing excluded, image decoding
// included) `repetitions` times, then appends min and median rows per phase.
BenchResult bench(const std::filesystem::path &manifest_path, std::span<const VolumeSeries> volumes,
                  std::span<const ReduceOptions> methods, int repetitions);

std::string bench_csv(std::span<const BenchRow> rows);

}  // namespace slicereduce
