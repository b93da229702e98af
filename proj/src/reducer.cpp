#include "slicereduce/reducer.hpp"

#include <chrono>
#include <cmath>
#include <set>
#include <type_traits>
#include <unordered_map>

#include "slicereduce/error.hpp"
#include "slicereduce/metrics.hpp"
#include "slicereduce/parallel.hpp"

namespace slicereduce {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

bool visits_before(const PairScore &l, const PairScore &r, bool smaller_is_more_similar) {
  if (l.score != r.score) return smaller_is_more_similar ? l.score < r.score : l.score > r.score;
  if (l.a != r.a) return l.a < r.a;
  return l.b < r.b;
}

void sort_pairs(SortedPairList &list) {
  const bool smaller = list.smaller_is_more_similar;
  std::sort(list.pairs.begin(), list.pairs.end(),
            [smaller](const PairScore &l, const PairScore &r) { return visits_before(l, r, smaller); });
}

bool more_similar_than(double score, double t, bool smaller_is_more_similar) {
  return smaller_is_more_similar ? score < t : score > t;
}

int every_n_stride(double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidTarget, "fraction must lie in (0, 1], got " + std::to_string(fraction));
  }
  return std::max(1, static_cast<int>(std::floor(1.0 / fraction + 0.5)));
}

VolumePlan reduce_every_n(const VolumeSeries &volume, int n) {
  if (n < 1) throw Error(ErrorCode::InvalidTarget, "EveryN stride must be at least 1");
  VolumePlan plan;
  plan.volume_id = volume.volume_id;
  plan.slice_count = volume.size();
  for (int i = 0; i < volume.size(); ++i) (i % n == 0 ? plan.kept : plan.removed).push_back(i);
  return plan;
}

int target_count(const Mode &mode, int m) {
  if (m < 1) throw Error(ErrorCode::InvalidTarget, "volume has no slices");
  if (const auto *f = std::get_if<mode::Fraction>(&mode)) {
    if (!(f->f > 0.0 && f->f <= 1.0)) {
      throw Error(ErrorCode::InvalidTarget, "fraction must lie in (0, 1], got " + std::to_string(f->f));
    }
    // Round half up; the epsilon absorbs representation error in f * m.
    const int k = static_cast<int>(std::floor(f->f * m + 0.5 + 1e-9));
    return std::clamp(k, 1, m);
  }
  if (const auto *c = std::get_if<mode::Count>(&mode)) {
    if (c->k < 1 || c->k > m) {
      throw Error(ErrorCode::InvalidTarget,
                  "count " + std::to_string(c->k) + " outside [1, " + std::to_string(m) + "]");
    }
    return c->k;
  }
  throw Error(ErrorCode::InvalidArgument, "threshold mode has no target count");
}

// ---------------------------------------------------------------------------
// Pair scoring

struct PairScorer::Impl {
  Method method;
  int m = 0;
  const std::vector<SliceImage> *images = nullptr;
  std::vector<DHash64> hashes;
  std::vector<HistogramFeatures> histograms;
  std::vector<EmbeddingFeatures> vectors;
};

PairScorer::PairScorer(const Method &method, const VolumeData &data, unsigned threads)
    : impl_(std::make_unique<Impl>()) {
  auto &s = *impl_;
  s.method = method;
  s.m = data.size();

  std::visit(
      [&](const auto &v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, method::EveryN>) {
          throw Error(ErrorCode::InvalidArgument, "EveryN does not score pairs");
        } else if constexpr (std::is_same_v<T, method::DeepNet>) {
          if (data.embeddings.size() != static_cast<std::size_t>(s.m)) {
            throw Error(ErrorCode::MissingEmbedding, "DeepNet needs one embedding per slice");
          }
          s.vectors.resize(s.m);
          parallel_for(s.m, threads, [&](std::size_t i) { s.vectors[i] = embedding_features(data.embeddings[i]); });
        } else {
          if (data.images.size() != static_cast<std::size_t>(s.m)) {
            throw Error(ErrorCode::InvalidArgument, method_name(method) + " needs one image per slice");
          }
          s.images = &data.images;
          if constexpr (std::is_same_v<T, method::Hash>) {
            s.hashes.resize(s.m);
            parallel_for(s.m, threads, [&](std::size_t i) { s.hashes[i] = dhash(data.images[i]); });
          } else if constexpr (std::is_same_v<T, method::Mi>) {
            s.histograms.resize(s.m);
            parallel_for(s.m, threads,
                         [&](std::size_t i) { s.histograms[i] = histogram_features(data.images[i], v.bins); });
          }
        }
      },
      method);
}

PairScorer::~PairScorer() = default;
PairScorer::PairScorer(PairScorer &&) noexcept = default;
PairScorer &PairScorer::operator=(PairScorer &&) noexcept = default;

int PairScorer::size() const { return impl_->m; }

double PairScorer::score(int a, int b) const {
  const auto &s = *impl_;
  switch (s.method.index()) {
    case 1: return ssim((*s.images)[a], (*s.images)[b]);
    case 2: return nmi(s.histograms[a], s.histograms[b]);
    case 3: return cosine(s.vectors[a], s.vectors[b]);
    case 4: return hamming(s.hashes[a], s.hashes[b]);
    default: throw Error(ErrorCode::InvalidArgument, "EveryN does not score pairs");
  }
}

std::vector<PairScore> score_all_pairs(const PairScorer &scorer, unsigned threads) {
  const int m = scorer.size();
  std::vector<PairScore> pairs;
  pairs.reserve(static_cast<std::size_t>(m) * (m > 0 ? m - 1 : 0) / 2);
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) pairs.push_back(PairScore{a, b, 0.0});
  }
  parallel_for(pairs.size(), threads, [&](std::size_t i) {
    auto &p = pairs[i];
    try {
      p.score = scorer.score(p.a, p.b);
    } catch (const Error &e) {
      throw e.with_context("pair (" + std::to_string(p.a) + ", " + std::to_string(p.b) + ")");
    }
    if (!std::isfinite(p.score)) {
      throw Error(ErrorCode::InvalidArgument,
                  "pair (" + std::to_string(p.a) + ", " + std::to_string(p.b) + ") produced a non-finite score");
    }
  });
  return pairs;
}

SortedPairList pairwise_scores(const Method &method, const VolumeData &data, unsigned threads) {
  PairScorer scorer(method, data, threads);
  SortedPairList list{score_all_pairs(scorer, threads), smaller_is_more_similar(method)};
  sort_pairs(list);
  return list;
}

// ---------------------------------------------------------------------------
// Greedy walk

VolumePlan greedy_reduce(const SortedPairList &list, int m, const Mode &mode) {
  if (m < 1) throw Error(ErrorCode::InvalidTarget, "volume has no slices");
  const auto *threshold = std::get_if<mode::Threshold>(&mode);
  if (threshold && !std::isfinite(threshold->t)) throw Error(ErrorCode::InvalidTarget, "threshold must be finite");
  const int target = threshold ? 1 : target_count(mode, m);

  std::vector<char> kept(static_cast<std::size_t>(m), 1);
  int live = m;
  VolumePlan plan;
  plan.slice_count = m;

  for (const auto &p : list.pairs) {
    if (threshold) {
      if (!more_similar_than(p.score, threshold->t, list.smaller_is_more_similar)) break;
    } else if (live <= target) {
      break;
    }
    if (p.a < 0 || p.b >= m || p.a >= p.b) {
      throw Error(ErrorCode::InvalidArgument,
                  "pair (" + std::to_string(p.a) + ", " + std::to_string(p.b) + ") is not a valid pair of 0.." +
                      std::to_string(m - 1));
    }
    if (kept[p.a] && kept[p.b] && live > 1) {
      kept[p.b] = 0;
      --live;
      plan.removals.push_back(Removal{p.b, p.a, p.score});
    }
  }
  if (!threshold && live > target) {
    throw Error(ErrorCode::InvalidArgument, "pair list does not cover the volume; " + std::to_string(live) +
                                                " slices remain, target " + std::to_string(target));
  }

  for (int i = 0; i < m; ++i) (kept[i] ? plan.kept : plan.removed).push_back(i);
  return plan;
}

// ---------------------------------------------------------------------------
// Dataset driver

VolumeData load_volume_data(const std::filesystem::path &manifest_path, const VolumeSeries &volume,
                            const ReduceOptions &options) {
  VolumeData data;
  if (std::holds_alternative<method::EveryN>(options.method)) return data;
  const auto m = static_cast<std::size_t>(volume.size());
  if (std::holds_alternative<method::DeepNet>(options.method)) {
    if (!options.embeddings) throw Error(ErrorCode::InvalidArgument, "DeepNet requires an embedding table");
    data.embeddings.reserve(m);
    for (const auto &ref : volume.slices) data.embeddings.push_back(lookup(*options.embeddings, ref));
    return data;
  }
  data.images.resize(m);
  parallel_for(m, options.threads, [&](std::size_t i) {
    try {
      data.images[i] = load_slice_image(manifest_path, volume.slices[i], options.window);
    } catch (const Error &e) {
      throw e.with_context("slice " + slice_key(volume.slices[i]));
    }
  });
  return data;
}

ReductionPlan reduce_dataset(const std::filesystem::path &manifest_path, std::span<const VolumeSeries> volumes,
                             const ReduceOptions &options, PhaseTimes *times) {
  ReductionPlan plan;
  plan.method = options.method;
  plan.mode = options.mode;
  plan.tool_version = tool_version();
  PhaseTimes local;
  PhaseTimes &t = times ? *times : local;
  t = PhaseTimes{};

  std::optional<int> stride;
  if (const auto *every = std::get_if<method::EveryN>(&options.method)) {
    if (!std::holds_alternative<mode::Fraction>(options.mode) || every->n < 1) {
      throw Error(ErrorCode::InvalidTarget, "EveryN needs a stride derived from a fraction");
    }
    stride = every->n;
  }

  for (const auto &volume : volumes) {
    const int m = volume.size();
    t.slices += static_cast<std::size_t>(m);
    if (stride) {
      auto start = Clock::now();
      plan.volumes.push_back(reduce_every_n(volume, *stride));
      t.select += seconds_since(start);
      continue;
    }

    auto start = Clock::now();
    const auto data = load_volume_data(manifest_path, volume, options);
    t.decode += seconds_since(start);

    start = Clock::now();
    PairScorer scorer(options.method, data, options.threads);
    t.features += seconds_since(start);

    start = Clock::now();
    SortedPairList list;
    list.smaller_is_more_similar = smaller_is_more_similar(options.method);
    try {
      list.pairs = score_all_pairs(scorer, options.threads);
    } catch (const Error &e) {
      throw e.with_context("volume " + volume.volume_id);
    }
    t.compare += seconds_since(start);
    t.pairs += list.pairs.size();

    start = Clock::now();
    sort_pairs(list);
    // A per-volume count cannot exceed the volume; smaller volumes are kept whole.
    Mode mode = options.mode;
    if (auto *c = std::get_if<mode::Count>(&mode)) c->k = std::min(c->k, m);
    auto vp = greedy_reduce(list, m, mode);
    vp.volume_id = volume.volume_id;
    plan.volumes.push_back(std::move(vp));
    t.select += seconds_since(start);
  }

  plan.scoring_seconds = t.decode + t.features + t.compare;
  plan.selection_seconds = t.select;
  return plan;
}

std::vector<SliceRef> apply_plan(const ReductionPlan &plan, std::span<const SliceRef> manifest) {
  std::unordered_map<std::string, const VolumePlan *> by_volume;
  for (const auto &vp : plan.volumes) {
    if (!by_volume.emplace(vp.volume_id, &vp).second) {
      throw Error(ErrorCode::PlanManifestMismatch, "plan lists volume " + vp.volume_id + " twice");
    }
  }
  std::unordered_map<std::string, int> counts;
  for (const auto &ref : manifest) ++counts[ref.volume_id];
  for (const auto &[id, n] : counts) {
    auto it = by_volume.find(id);
    if (it == by_volume.end() || it->second->kept.empty()) {
      throw Error(ErrorCode::PlanManifestMismatch, "plan has no selection for volume " + id);
    }
    if (it->second->slice_count != n) {
      throw Error(ErrorCode::PlanManifestMismatch, "volume " + id + " has " + std::to_string(n) +
                                                       " slices in the manifest, plan expects " +
                                                       std::to_string(it->second->slice_count));
    }
  }
  for (const auto &vp : plan.volumes) {
    if (!counts.count(vp.volume_id)) {
      throw Error(ErrorCode::PlanManifestMismatch, "plan volume " + vp.volume_id + " is not in the manifest");
    }
  }

  std::unordered_map<std::string, std::set<int>> keep;
  for (const auto &vp : plan.volumes) keep[vp.volume_id].insert(vp.kept.begin(), vp.kept.end());
  std::vector<SliceRef> out;
  for (const auto &ref : manifest) {
    if (keep[ref.volume_id].count(ref.slice_index)) out.push_back(ref);
  }
  return out;
}

}  // namespace slicereduce
