// Acceptance suite. Prints one PASS/FAIL/SKIPPED line per criterion and
// exits non-zero if any criterion fails.
//
// Optional environment: SLICEREDUCE_PETCT_MANIFEST and SLICEREDUCE_LIDC_MANIFEST
// point at manifests of the full public corpora for the dataset-fraction check.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "oracles.hpp"
#include "slicereduce/analysis.hpp"
#include "slicereduce/ingest.hpp"
#include "slicereduce/manifest.hpp"
#include "slicereduce/metrics.hpp"
#include "slicereduce/provenance.hpp"
#include "slicereduce/reducer.hpp"
#include "slicereduce/synth.hpp"
#include "test_util.hpp"

using namespace slicereduce;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned tolerances and targets.
constexpr double kOracleTol = 1e-6;
constexpr double kIdentityTol = 1e-9;
constexpr double kClosedFormTol = 1e-6;
constexpr double kClosedFormValue = 0.983611;
constexpr double kGreedySeconds = 10.0;
constexpr double kMinSlicesPerSecond = 300.0;
constexpr double kFractionTolPoints = 0.5;

const std::uint64_t kGolden[5] = {0x45a5a28d3815921cULL, 0xffffffffff7f7f3fULL, 0x3973e7ce9c3973e7ULL,
                                  0x5b4398a4e446667cULL, 0x5ac6d2390c1e514bULL};

struct Outcome {
  std::string status;  // PASS, FAIL, SKIPPED
  std::string detail;
};

Outcome pass(std::string d) { return {"PASS", std::move(d)}; }
Outcome fail(std::string d) { return {"FAIL", std::move(d)}; }

std::string fmt(double v, int precision = 6) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::vector<std::string> &args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

void require_cli(const std::vector<std::string> &args, CliResult *result = nullptr) {
  auto r = run_cli(args);
  if (r.code != 0) {
    std::string line;
    for (const auto &a : args) line += a + " ";
    throw std::runtime_error("slicereduce " + line + "exited " + std::to_string(r.code) + ": " + r.err);
  }
  if (result) *result = std::move(r);
}

oracle::Image to_oracle(const SliceImage &s) {
  return oracle::Image{s.width(), s.height(), std::vector<std::uint8_t>(s.pixels().begin(), s.pixels().end())};
}

SliceImage to_slice(const oracle::Image &im) { return SliceImage(im.w, im.h, im.p); }

// ---------------------------------------------------------------------------

Outcome greedy_threshold(const fs::path &scratch) {
  const fs::path data = scratch / "greedy";
  require_cli({"synth", "--out", data.string(), "--volumes", "200", "--slices", "64", "--min-slices", "2", "--width",
               "64", "--height", "64", "--seed", "2024"});
  const fs::path manifest = data / "manifest.jsonl";
  const auto volumes = validate_manifest(load_manifest(manifest));

  std::map<int, ReductionPlan> plans;
  const auto start = Clock::now();
  for (int t : {3, 6, 12}) {
    const fs::path out = scratch / ("greedy_t" + std::to_string(t));
    require_cli({"reduce", "--manifest", manifest.string(), "--method", "hash", "--mode", "threshold", "--value",
                 std::to_string(t), "--out", out.string()});
    plans[t] = read_provenance(out / "provenance.json").plan;
  }
  const double reduce_seconds = seconds_since(start);

  // Independent rescoring: reference hash over every decoded slice.
  std::map<std::string, std::vector<std::uint64_t>> hashes;
  int min_m = 1 << 30, max_m = 0;
  for (const auto &v : volumes) {
    min_m = std::min(min_m, v.size());
    max_m = std::max(max_m, v.size());
    auto &h = hashes[v.volume_id];
    for (const auto &ref : v.slices) h.push_back(oracle::dhash(to_oracle(load_slice_image(manifest, ref, {}))));
  }
  auto dist = [&](const std::string &vol, int a, int b) {
    return oracle::popcount64(hashes[vol][a] ^ hashes[vol][b]);
  };

  std::size_t removed_total = 0;
  for (const auto &[t, plan] : plans) {
    if (plan.volumes.size() != volumes.size()) return fail("t=" + std::to_string(t) + ": volume count differs");
    for (const auto &vp : plan.volumes) {
      const int m = vp.slice_count;
      for (std::size_t i = 0; i < vp.kept.size(); ++i) {
        for (std::size_t j = i + 1; j < vp.kept.size(); ++j) {
          if (dist(vp.volume_id, vp.kept[i], vp.kept[j]) < t) {
            return fail("t=" + std::to_string(t) + " " + vp.volume_id + ": kept pair (" + std::to_string(vp.kept[i]) +
                        "," + std::to_string(vp.kept[j]) + ") below threshold");
          }
        }
      }
      std::vector<bool> live(static_cast<std::size_t>(m), true);
      std::set<int> removed_by_log;
      for (const auto &r : vp.removals) {
        if (r.index < 0 || r.index >= m || r.partner < 0 || r.partner >= m || !live[r.index] || !live[r.partner]) {
          return fail("t=" + std::to_string(t) + " " + vp.volume_id + ": removal of " + std::to_string(r.index) +
                      " against a slice not kept at that time");
        }
        const int d = dist(vp.volume_id, r.index, r.partner);
        if (!(d < t) || d != static_cast<int>(r.score)) {
          return fail("t=" + std::to_string(t) + " " + vp.volume_id + ": removal of " + std::to_string(r.index) +
                      " has rescored distance " + std::to_string(d));
        }
        live[r.index] = false;
        removed_by_log.insert(r.index);
      }
      if (std::vector<int>(removed_by_log.begin(), removed_by_log.end()) != vp.removed ||
          vp.kept.size() + vp.removed.size() != static_cast<std::size_t>(m)) {
        return fail("t=" + std::to_string(t) + " " + vp.volume_id + ": kept/removed sets inconsistent with the log");
      }
      removed_total += vp.removed.size();
    }
  }
  const std::string detail = std::to_string(volumes.size()) + " volumes, m in [" + std::to_string(min_m) + "," +
                             std::to_string(max_m) + "], " + std::to_string(removed_total) +
                             " removals verified; reduce wall time " + fmt(reduce_seconds, 3) + " s (limit " +
                             fmt(kGreedySeconds) + " s)";
  if (volumes.size() != 200 || min_m < 2 || max_m > 64) return fail("corpus shape wrong: " + detail);
  if (reduce_seconds >= kGreedySeconds) return fail(detail);
  return pass(detail);
}

Outcome hand_traced() {
  SortedPairList list;
  list.smaller_is_more_similar = true;
  list.pairs = {{0, 1, 2}, {0, 2, 7}, {0, 3, 9}, {1, 2, 3}, {1, 3, 8}, {2, 3, 5}};
  sort_pairs(list);
  const auto t6 = greedy_reduce(list, 4, mode::Threshold{6});
  const auto c2 = greedy_reduce(list, 4, mode::Count{2});
  const std::vector<int> want{0, 2};
  if (t6.kept != want) return fail("Threshold(6) kept a different set");
  if (c2.kept != want) return fail("Count(2) kept a different set");
  return pass("Threshold(6) and Count(2) keep {0,2}");
}

Outcome metric_oracles() {
  double worst_ssim = 0.0, worst_nmi = 0.0;
  for (int i = 0; i < 50; ++i) {
    const auto x = oracle::noise_image(64, 64, 1000 + i);
    oracle::Image y;
    switch (i % 3) {
      case 0: y = oracle::perturbed(x, 5 + i, 2000 + i); break;
      case 1: y = oracle::noise_image(64, 64, 3000 + i); break;
      default: y = oracle::perturbed(oracle::hash_fixtures()[i % 5], 1 + i % 40, 4000 + i); break;
    }
    const auto a = i % 3 == 2 ? oracle::hash_fixtures()[i % 5] : x;
    worst_ssim = std::max(worst_ssim, std::abs(ssim(to_slice(a), to_slice(y)) - oracle::ssim(a, y)));
    worst_nmi = std::max(worst_nmi, std::abs(nmi(to_slice(a), to_slice(y), 256) - oracle::nmi(a, y, 256)));
  }
  double worst_self_ssim = 0.0, worst_self_nmi = 0.0;
  for (int i = 0; i < 10; ++i) {
    const auto x = to_slice(oracle::noise_image(64, 64, 77 + i));
    worst_self_ssim = std::max(worst_self_ssim, std::abs(ssim(x, x) - 1.0));
    worst_self_nmi = std::max(worst_self_nmi, std::abs(nmi(x, x, 256) - 2.0));
  }
  const SliceImage c100(32, 32, std::vector<std::uint8_t>(32 * 32, 100));
  const SliceImage c120(32, 32, std::vector<std::uint8_t>(32 * 32, 120));
  const double closed = ssim(c100, c120);

  const std::string detail = "max |dssim| " + fmt(worst_ssim, 3) + ", max |dnmi| " + fmt(worst_nmi, 3) +
                             ", ssim(x,x)-1 " + fmt(worst_self_ssim, 3) + ", nmi(x,x)-2 " + fmt(worst_self_nmi, 3) +
                             ", constant pair " + fmt(closed, 9);
  if (worst_ssim > kOracleTol || worst_nmi > kOracleTol || worst_self_ssim > kIdentityTol ||
      worst_self_nmi > kIdentityTol || std::abs(closed - kClosedFormValue) > kClosedFormTol) {
    return fail(detail);
  }
  return pass(detail);
}

Outcome hash_goldens() {
  const auto fixtures = oracle::hash_fixtures();
  for (int i = 0; i < 5; ++i) {
    const auto got = dhash(to_slice(fixtures[i])).bits;
    if (got != kGolden[i]) return fail("fixture " + std::to_string(i) + " hashed to " + DHash64{got}.hex());
  }
  if (dhash(SliceImage(64, 64, std::vector<std::uint8_t>(64 * 64, 90))).bits != 0) {
    return fail("constant image does not hash to 0");
  }
  std::vector<std::uint8_t> rows(9 * 8);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 9; ++x) rows[y * 9 + x] = static_cast<std::uint8_t>(10 + 20 * x + y);
  }
  if (dhash(SliceImage(9, 8, rows)).bits != ~std::uint64_t{0}) return fail("increasing rows do not hash to all ones");
  return pass("5 frozen hashes bit-exact; constant -> 0x0; increasing rows -> all ones");
}

Outcome determinism(const fs::path &scratch) {
  const fs::path data = scratch / "determinism";
  require_cli({"synth", "--out", data.string(), "--volumes", "6", "--slices", "40", "--min-slices", "10", "--width",
               "64", "--height", "64", "--seed", "99"});
  const std::string manifest = (data / "manifest.jsonl").string();
  const std::vector<std::vector<std::string>> runs = {
      {"--method", "hash", "--mode", "threshold", "--value", "6"},
      {"--method", "hash", "--mode", "fraction", "--value", "0.1"},
      {"--method", "ssim", "--mode", "fraction", "--value", "0.25"},
      {"--method", "mi", "--mode", "count", "--value", "5"},
  };
  int idx = 0;
  for (const auto &r : runs) {
    std::string digests[2], reduced[2];
    const char *threads[2] = {"1", "8"};
    for (int k = 0; k < 2; ++k) {
      const fs::path out = scratch / ("det_" + std::to_string(idx) + "_" + threads[k]);
      std::vector<std::string> args = {"reduce", "--manifest", manifest, "--out", out.string(), "--threads", threads[k]};
      args.insert(args.end(), r.begin(), r.end());
      require_cli(args);
      reduced[k] = testutil::read_file(out / "reduced.jsonl");
      digests[k] = read_provenance(out / "provenance.json").plan_digest;
    }
    if (reduced[0] != reduced[1]) return fail(r[1] + " " + r[3] + ": reduced manifests differ");
    if (digests[0] != digests[1]) return fail(r[1] + " " + r[3] + ": plan digests differ");
    ++idx;
  }
  return pass(std::to_string(runs.size()) + " configurations byte-identical at 1 and 8 threads");
}

// Minimal SSEB v1 writer, independent of the library serializer.
void write_sseb(const fs::path &path, const std::vector<std::string> &keys, std::uint32_t dim, std::uint32_t seed) {
  std::ofstream f(path, std::ios::binary);
  auto put = [&](const void *p, std::size_t n) { f.write(static_cast<const char *>(p), static_cast<std::streamsize>(n)); };
  const std::uint32_t version = 1;
  const std::uint64_t count = keys.size();
  put("SSEB", 4);
  put(&version, 4);
  put(&dim, 4);
  put(&count, 8);
  oracle::Xorshift32 rng(seed);
  for (const auto &k : keys) {
    const auto len = static_cast<std::uint16_t>(k.size());
    put(&len, 2);
    put(k.data(), k.size());
    for (std::uint32_t i = 0; i < dim; ++i) {
      const float v = static_cast<float>(rng.below(2001) - 1000) / 1000.0f + 0.001f;
      put(&v, 4);
    }
  }
}

struct BenchLine {
  double wall = 0.0;
  double per_second = 0.0;
  std::size_t pairs = 0;
  double per_pair = 0.0;
};

// (method, phase) -> median row of a bench CSV.
std::map<std::pair<std::string, std::string>, BenchLine> median_rows(const std::string &csv) {
  std::map<std::pair<std::string, std::string>, BenchLine> rows;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (cells.size() < 7 || cells[4] != "median") continue;
    rows[{cells[0], cells[1]}] = BenchLine{std::stod(cells[2]), std::stod(cells[3]),
                                           static_cast<std::size_t>(std::stoull(cells[5])), std::stod(cells[6])};
  }
  return rows;
}

Outcome throughput(const fs::path &scratch) {
  const fs::path data = scratch / "throughput";
  require_cli({"synth", "--out", data.string(), "--volumes", "8", "--slices", "60", "--width", "512", "--height", "512",
               "--seed", "1"});
  CliResult r;
  require_cli({"bench", "--manifest", (data / "manifest.jsonl").string(), "--methods", "hash", "--repetitions", "3",
               "--threads", "1"},
              &r);
  const auto rows = median_rows(r.out);
  const auto it = rows.find({"hash", "total"});
  if (it == rows.end()) return fail("bench output has no hash total median row");
  const double rate = it->second.per_second;
  const std::string detail = "hash median " + fmt(rate, 4) + " slices/s over 480 slices of 512x512, 1 thread (target " +
                             fmt(kMinSlicesPerSecond) + ")";
  return rate >= kMinSlicesPerSecond ? pass(detail) : fail(detail);
}

Outcome method_ordering(const fs::path &scratch) {
  const fs::path data = scratch / "ordering";
  require_cli({"synth", "--out", data.string(), "--volumes", "2", "--slices", "8", "--width", "512", "--height", "512",
               "--seed", "5"});
  const fs::path manifest = data / "manifest.jsonl";
  std::vector<std::string> keys;
  for (const auto &ref : load_manifest(manifest)) keys.push_back(slice_key(ref));
  write_sseb(scratch / "ordering.sseb", keys, 1000, 17);

  CliResult r;
  require_cli({"bench", "--manifest", manifest.string(), "--methods", "every-n,hash,deepnet,mi,ssim", "--repetitions",
               "3", "--threads", "1", "--embeddings", (scratch / "ordering.sseb").string()},
              &r);
  const auto rows = median_rows(r.out);
  std::map<std::string, double> per_pair, total_per_pair;
  for (const std::string m : {"every-n", "hash", "deepnet", "mi", "ssim"}) {
    const auto c = rows.find({m, "compare"});
    const auto t = rows.find({m, "total"});
    if (c == rows.end() || t == rows.end()) return fail("bench output lacks " + m + " rows");
    per_pair[m] = c->second.per_pair;
    total_per_pair[m] = t->second.pairs ? t->second.wall / static_cast<double>(t->second.pairs) : 0.0;
  }
  std::string detail = "compare s/pair:";
  for (const std::string m : {"every-n", "hash", "deepnet", "mi", "ssim"}) detail += " " + m + "=" + fmt(per_pair[m], 3);
  detail += "; total s/pair:";
  for (const std::string m : {"hash", "deepnet", "mi", "ssim"}) detail += " " + m + "=" + fmt(total_per_pair[m], 3);
  const bool ok = per_pair["every-n"] < per_pair["hash"] && per_pair["hash"] < per_pair["deepnet"] &&
                  per_pair["deepnet"] < per_pair["mi"] && per_pair["deepnet"] < per_pair["ssim"];
  return ok ? pass(detail) : fail(detail);
}

Outcome dataset_fractions() {
  // Reported totals: 48,718 of 541,439 and 22,672 of 244,527 slices.
  struct Reference {
    const char *name;
    const char *env;
    std::size_t kept;
    std::size_t total;
    double percent;
  };
  const Reference refs[] = {{"PET-CT", "SLICEREDUCE_PETCT_MANIFEST", 48718, 541439, 9.0},
                            {"LIDC", "SLICEREDUCE_LIDC_MANIFEST", 22672, 244527, 9.3}};

  std::string detail;
  for (const auto &ref : refs) {
    ReductionPlan plan{method::Hash{}, mode::Threshold{6}, {}, 0.0, 0.0, tool_version()};
    plan.volumes.push_back(VolumePlan{"all", static_cast<int>(ref.total), {}, {}, {}});
    auto &vp = plan.volumes.back();
    for (std::size_t i = 0; i < ref.total; ++i) (i < ref.kept ? vp.kept : vp.removed).push_back(static_cast<int>(i));
    const double pct = 100.0 * stats(plan).kept_fraction;
    if (std::abs(pct - ref.percent) > kFractionTolPoints) {
      return fail(std::string(ref.name) + " reference arithmetic gives " + fmt(pct, 4) + "%");
    }
  }

  bool ran = false;
  for (const auto &ref : refs) {
    const char *path = std::getenv(ref.env);
    if (!path || !*path) continue;
    ran = true;
    const auto volumes = validate_manifest(load_manifest(path));
    ReduceOptions opt;
    opt.method = method::Hash{};
    opt.mode = mode::Threshold{6};
    const auto plan = reduce_dataset(path, volumes, opt);
    const double pct = 100.0 * stats(plan).kept_fraction;
    detail += std::string(ref.name) + " kept " + fmt(pct, 4) + "% (reported " + fmt(ref.percent) + "%); ";
    if (std::abs(pct - ref.percent) > kFractionTolPoints) return fail(detail);
  }
  if (!ran) {
    return {"SKIPPED", "reference arithmetic ok; set SLICEREDUCE_PETCT_MANIFEST / SLICEREDUCE_LIDC_MANIFEST to run "
                       "on the public corpora"};
  }
  return pass(detail);
}

ReductionPlan plan_of(const std::vector<std::pair<std::string, std::vector<int>>> &kept, int m) {
  ReductionPlan p{method::Hash{}, mode::Threshold{6}, {}, 0.0, 0.0, tool_version()};
  for (const auto &[id, k] : kept) {
    VolumePlan v{id, m, k, {}, {}};
    for (int i = 0; i < m; ++i) {
      if (!std::binary_search(k.begin(), k.end(), i)) v.removed.push_back(i);
    }
    p.volumes.push_back(v);
  }
  return p;
}

Outcome overlap_analytics() {
  const auto a = plan_of({{"v", {0, 1, 2}}}, 4);
  const auto b = plan_of({{"v", {1, 2, 3}}}, 4);
  const auto ab = overlap(a, b);
  if (ab.jaccard != 0.5 || ab.containment_a != 2.0 / 3.0) {
    return fail("{a,b,c} vs {b,c,d}: jaccard " + fmt(ab.jaccard) + ", containment " + fmt(ab.containment_a));
  }
  if (overlap(a, a).jaccard != 1.0) return fail("identical plans do not give 1.0");
  const auto c = plan_of({{"v", {3}}}, 4);
  if (overlap(a, c).jaccard != 0.0) return fail("disjoint plans do not give 0.0");

  SplitMix64 rng(31);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::pair<std::string, std::vector<int>>> ka, kb;
    const int m = rng.uniform_int(1, 30);
    for (int v = 0; v < 3; ++v) {
      std::vector<int> x, y;
      for (int i = 0; i < m; ++i) {
        if (rng.uniform() < 0.4) x.push_back(i);
        if (rng.uniform() < 0.4) y.push_back(i);
      }
      if (x.empty()) x.push_back(0);
      if (y.empty()) y.push_back(m - 1);
      ka.emplace_back("v" + std::to_string(v), x);
      kb.emplace_back("v" + std::to_string(v), y);
    }
    const auto pa = plan_of(ka, m);
    const auto pb = plan_of(kb, m);
    if (overlap(pa, pb).jaccard != overlap(pb, pa).jaccard) {
      return fail("jaccard not symmetric on trial " + std::to_string(trial));
    }
  }
  return pass("three set cases exact; jaccard symmetric on 500 random plan pairs");
}

}  // namespace

int main() {
  testutil::TempDir scratch("acceptance");
  const fs::path dir = scratch.path();

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"greedy threshold correctness", [&] { return greedy_threshold(dir); }},
      {"hand-traced fixture", hand_traced},
      {"metric oracles", metric_oracles},
      {"hash golden vectors", hash_goldens},
      {"determinism across thread counts", [&] { return determinism(dir); }},
      {"hash throughput", [&] { return throughput(dir); }},
      {"per-pair cost ordering", [&] { return method_ordering(dir); }},
      {"public dataset fractions", dataset_fractions},
      {"overlap analytics", overlap_analytics},
  };

  int failures = 0;
  for (const auto &[name, check] : criteria) {
    Outcome o;
    const auto start = Clock::now();
    try {
      o = check();
    } catch (const std::exception &e) {
      o = fail(std::string("exception: ") + e.what());
    }
    if (o.status == "FAIL") ++failures;
    std::cout << std::left << std::setw(8) << o.status << name << " (" << fmt(seconds_since(start), 3) << " s): "
              << o.detail << std::endl;
  }
  std::cout << (failures ? "FAILED: " + std::to_string(failures) + " criterion(s)" : std::string("ALL PASSED"))
            << std::endl;
  return failures ? 1 : 0;
}
