#pragma once

#include <algorithm>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "slicereduce/embeddings.hpp"
#include "slicereduce/ingest.hpp"
#include "slicereduce/types.hpp"

namespace slicereduce {

// Intra-volume pairs ordered most similar first. Ties are broken by
// ascending (a, b) so the order is total.
struct SortedPairList {
  std::vector<PairScore> pairs;
  bool smaller_is_more_similar = false;
};

// Strict weak order: true if l should be visited before r.
bool visits_before(const PairScore &l, const PairScore &r, bool smaller_is_more_similar);
void sort_pairs(SortedPairList &list);

// True if the pair counts as "more similar than t" (strict in both
// orientations: distance < t, or similarity > t).
bool more_similar_than(double score, double t, bool smaller_is_more_similar);

// Stride for the EveryN baseline that keeps roughly the fraction f.
int every_n_stride(double fraction);

VolumePlan reduce_every_n(const VolumeSeries &volume, int n);

// Number of slices Count/Fraction mode keeps from a volume of m slices.
int target_count(const Mode &mode, int m);

// Per-slice inputs for a metric: images for SSIM, MI and Hash; embedding
// vectors for DeepNet.
struct VolumeData {
  std::vector<SliceImage> images;
  std::vector<std::span<const float>> embeddings;

  int size() const { return static_cast<int>(std::max(images.size(), embeddings.size())); }
};

// Scores a single pair at a time after precomputing per-slice features
// (hashes, histogram bins, embedding norms).
class PairScorer {
 public:
  // data must outlive the scorer.
  PairScorer(const Method &method, const VolumeData &data, unsigned threads = 1);
  ~PairScorer();
  PairScorer(PairScorer &&) noexcept;
  PairScorer &operator=(PairScorer &&) noexcept;

  double score(int a, int b) const;
  int size() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// All m(m-1)/2 pair scores in (a, b) lexicographic order.
std::vector<PairScore> score_all_pairs(const PairScorer &scorer, unsigned threads);

// Scores and sorts every pair of the volume. The result is independent of
// the thread count.
SortedPairList pairwise_scores(const Method &method, const VolumeData &data, unsigned threads = 1);

// Walks pairs most similar first and drops the higher-indexed slice of each
// pair whose slices are both still kept.
//   Threshold(t): stops at the first pair not more similar than t.
//   Count(k) / Fraction(f): stops once the target count remains.
VolumePlan greedy_reduce(const SortedPairList &pairs, int m, const Mode &mode);

struct ReduceOptions {
  Method method = method::Hash{};
  Mode mode = mode::Threshold{6};
  std::optional<WindowSpec> window;
  unsigned threads = 0;
  const EmbeddingTable *embeddings = nullptr;  // required for DeepNet
};

struct PhaseTimes {
  double decode = 0.0;    // image decode + windowing, or embedding lookup
  double features = 0.0;  // per-slice precomputation
  double compare = 0.0;   // pairwise metric evaluations
  double select = 0.0;    // sorting + greedy walk (or EveryN stride)
  std::size_t pairs = 0;
  std::size_t slices = 0;
};

VolumeData load_volume_data(const std::filesystem::path &manifest_path, const VolumeSeries &volume,
                            const ReduceOptions &options);

// Full reduction of a validated manifest. Volumes are processed in order;
// work inside a volume is spread over options.threads workers.
ReductionPlan reduce_dataset(const std::filesystem::path &manifest_path, std::span<const VolumeSeries> volumes,
                             const ReduceOptions &options, PhaseTimes *times = nullptr);

// Keeps the entries (in their original order) whose slice the plan keeps.
std::vector<SliceRef> apply_plan(const ReductionPlan &plan, std::span<const SliceRef> manifest);

}  // namespace slicereduce
