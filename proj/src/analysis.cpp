#include "slicereduce/analysis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "slicereduce/error.hpp"

namespace slicereduce {

using nlohmann::json;

namespace {

double ratio(std::size_t num, std::size_t den, double empty_value) {
  return den == 0 ? empty_value : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

OverlapReport overlap(const ReductionPlan &a, const ReductionPlan &b) {
  std::map<std::string, const VolumePlan *> vb;
  for (const auto &v : b.volumes) vb[v.volume_id] = &v;
  std::set<std::string> ids_a;
  for (const auto &v : a.volumes) ids_a.insert(v.volume_id);
  if (a.volumes.size() != b.volumes.size() || vb.size() != b.volumes.size() || ids_a.size() != a.volumes.size()) {
    throw Error(ErrorCode::ManifestMismatch, "plans cover different volume sets");
  }

  OverlapReport r;
  r.method_a = method_name(a.method);
  r.method_b = method_name(b.method);
  for (const auto &va : a.volumes) {
    auto it = vb.find(va.volume_id);
    if (it == vb.end()) throw Error(ErrorCode::ManifestMismatch, "volume " + va.volume_id + " missing from plan B");
    if (it->second->slice_count != va.slice_count) {
      throw Error(ErrorCode::ManifestMismatch, "volume " + va.volume_id + " has different slice counts");
    }
    const std::set<int> sa(va.kept.begin(), va.kept.end());
    const std::set<int> sb(it->second->kept.begin(), it->second->kept.end());
    VolumeOverlap vo;
    vo.volume_id = va.volume_id;
    vo.size_a = sa.size();
    vo.size_b = sb.size();
    for (int i : sa) vo.intersection += sb.count(i);
    vo.union_size = vo.size_a + vo.size_b - vo.intersection;
    vo.jaccard = ratio(vo.intersection, vo.union_size, 1.0);
    vo.containment_a = ratio(vo.intersection, vo.size_a, 1.0);
    vo.containment_b = ratio(vo.intersection, vo.size_b, 1.0);
    r.size_a += vo.size_a;
    r.size_b += vo.size_b;
    r.intersection += vo.intersection;
    r.union_size += vo.union_size;
    r.volumes.push_back(std::move(vo));
  }
  r.jaccard = ratio(r.intersection, r.union_size, 1.0);
  r.containment_a = ratio(r.intersection, r.size_a, 1.0);
  r.containment_b = ratio(r.intersection, r.size_b, 1.0);
  return r;
}

std::string overlap_json(const OverlapReport &r) {
  json vols = json::array();
  for (const auto &v : r.volumes) {
    vols.push_back({{"volume_id", v.volume_id},
                    {"kept_a", v.size_a},
                    {"kept_b", v.size_b},
                    {"intersection", v.intersection},
                    {"union", v.union_size},
                    {"jaccard", v.jaccard},
                    {"containment_a", v.containment_a},
                    {"containment_b", v.containment_b}});
  }
  json j = {{"method_a", r.method_a},   {"method_b", r.method_b},           {"kept_a", r.size_a},
            {"kept_b", r.size_b},       {"intersection", r.intersection},   {"union", r.union_size},
            {"jaccard", r.jaccard},     {"containment_a", r.containment_a}, {"containment_b", r.containment_b},
            {"volumes", vols}};
  return j.dump(2);
}

PlanStats stats(const ReductionPlan &plan) {
  PlanStats s;
  for (const auto &vp : plan.volumes) {
    VolumeStats v;
    v.volume_id = vp.volume_id;
    v.slices = static_cast<std::size_t>(vp.slice_count);
    v.kept = vp.kept.size();
    v.removed = vp.removed.size();
    v.kept_fraction = ratio(v.kept, v.slices, 0.0);
    s.slices += v.slices;
    s.kept += v.kept;
    s.removed += v.removed;
    s.volumes.push_back(std::move(v));
  }
  s.kept_fraction = ratio(s.kept, s.slices, 0.0);
  s.removed_fraction = ratio(s.removed, s.slices, 0.0);
  return s;
}

ScoreHistogram kept_score_histogram(const ReductionPlan &plan, const std::filesystem::path &manifest_path,
                                    std::span<const VolumeSeries> volumes, const ReduceOptions &options, int bins) {
  if (std::holds_alternative<method::EveryN>(options.method)) {
    throw Error(ErrorCode::InvalidArgument, "EveryN has no pair scores; choose a similarity metric");
  }
  ScoreHistogram h;
  if (std::holds_alternative<method::Hash>(options.method)) {
    h.lo = 0.0;
    h.hi = 64.0;
    h.counts.assign(65, 0);
  } else {
    if (bins < 1) throw Error(ErrorCode::InvalidArgument, "histogram needs at least one bin");
    const bool mi = std::holds_alternative<method::Mi>(options.method);
    h.lo = mi ? 1.0 : -1.0;
    h.hi = mi ? 2.0 : 1.0;
    h.counts.assign(static_cast<std::size_t>(bins), 0);
  }

  std::map<std::string, const VolumePlan *> by_id;
  for (const auto &vp : plan.volumes) by_id[vp.volume_id] = &vp;
  for (const auto &volume : volumes) {
    auto it = by_id.find(volume.volume_id);
    if (it == by_id.end()) throw Error(ErrorCode::PlanManifestMismatch, "no plan for volume " + volume.volume_id);
    VolumeSeries kept{volume.volume_id, {}};
    for (int i : it->second->kept) kept.slices.push_back(volume.slices.at(static_cast<std::size_t>(i)));
    const auto data = load_volume_data(manifest_path, kept, options);
    const auto list = pairwise_scores(options.method, data, options.threads);
    for (const auto &p : list.pairs) {
      std::size_t bin;
      if (h.counts.size() == 65) {
        bin = static_cast<std::size_t>(p.score);
      } else {
        const double t = (p.score - h.lo) / (h.hi - h.lo);
        bin = static_cast<std::size_t>(std::clamp(t * static_cast<double>(h.counts.size()), 0.0,
                                                  static_cast<double>(h.counts.size() - 1)));
      }
      ++h.counts[std::min(bin, h.counts.size() - 1)];
    }
  }
  return h;
}

std::string stats_json(const PlanStats &s) {
  json vols = json::array();
  for (const auto &v : s.volumes) {
    vols.push_back({{"volume_id", v.volume_id},
                    {"slices", v.slices},
                    {"kept", v.kept},
                    {"removed", v.removed},
                    {"kept_fraction", v.kept_fraction}});
  }
  json j = {{"slices", s.slices},
            {"kept", s.kept},
            {"removed", s.removed},
            {"kept_fraction", s.kept_fraction},
            {"removed_fraction", s.removed_fraction},
            {"volumes", vols}};
  if (s.kept_scores) {
    j["kept_pair_scores"] = {{"lo", s.kept_scores->lo}, {"hi", s.kept_scores->hi}, {"counts", s.kept_scores->counts}};
  }
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Benchmark harness

namespace {

constexpr const char *kPhases[] = {"decode", "features", "compare", "select", "total"};

double phase_seconds(const PhaseTimes &t, std::string_view phase) {
  if (phase == "decode") return t.decode;
  if (phase == "features") return t.features;
  if (phase == "compare") return t.compare;
  if (phase == "select") return t.select;
  return t.decode + t.features + t.compare + t.select;
}

BenchRow make_row(const std::string &method, std::string_view phase, double seconds, std::size_t slices,
                  std::size_t pairs, std::string repetition) {
  BenchRow row;
  row.method = method;
  row.phase = std::string(phase);
  row.wall_seconds = seconds;
  row.slices_per_second = seconds > 0.0 ? static_cast<double>(slices) / seconds : 0.0;
  row.repetition = std::move(repetition);
  const bool per_pair = phase == "compare" || phase == "total";
  row.pairs = per_pair ? pairs : 0;
  row.seconds_per_pair = per_pair && pairs > 0 ? seconds / static_cast<double>(pairs) : 0.0;
  return row;
}

}  // namespace

BenchResult bench(const std::filesystem::path &manifest_path, std::span<const VolumeSeries> volumes,
                  std::span<const ReduceOptions> methods, int repetitions) {
  if (repetitions < 1) throw Error(ErrorCode::InvalidArgument, "repetitions must be at least 1");
  BenchResult result;
  for (const auto &options : methods) {
    const auto name = method_name(options.method);
    std::map<std::string, std::vector<double>> samples;
    std::size_t slices = 0, pairs = 0;
    for (int rep = 1; rep <= repetitions; ++rep) {
      PhaseTimes t;
      auto plan = reduce_dataset(manifest_path, volumes, options, &t);
      slices = t.slices;
      pairs = t.pairs;
      for (const char *phase : kPhases) {
        const double s = phase_seconds(t, phase);
        samples[phase].push_back(s);
        result.rows.push_back(make_row(name, phase, s, slices, pairs, std::to_string(rep)));
      }
      if (rep == repetitions) {
        result.plans.push_back(std::move(plan));
        result.phases.push_back(t);
      }
    }
    for (const char *phase : kPhases) {
      auto v = samples[phase];
      std::sort(v.begin(), v.end());
      const double median = v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
      result.rows.push_back(make_row(name, phase, v.front(), slices, pairs, "min"));
      result.rows.push_back(make_row(name, phase, median, slices, pairs, "median"));
    }
  }
  return result;
}

std::string bench_csv(std::span<const BenchRow> rows) {
  std::ostringstream out;
  out << "method,phase,wall_seconds,slices_per_second,repetition,pairs,seconds_per_pair\n";
  char buf[256];
  for (const auto &r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%.6f,%.3f,%s,%zu,%.9g\n", r.method.c_str(), r.phase.c_str(),
                  r.wall_seconds, r.slices_per_second, r.repetition.c_str(), r.pairs, r.seconds_per_pair);
    out << buf;
  }
  return out.str();
}

}  // namespace slicereduce
