#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "json_config.hpp"
#include "slicereduce/analysis.hpp"
#include "slicereduce/digest.hpp"
#include "slicereduce/embeddings.hpp"
#include "slicereduce/error.hpp"
#include "slicereduce/ingest.hpp"
#include "slicereduce/manifest.hpp"
#include "slicereduce/metrics.hpp"
#include "slicereduce/provenance.hpp"
#include "slicereduce/reducer.hpp"
#include "slicereduce/synth.hpp"

namespace slicereduce::cli {

namespace fs = std::filesystem;

namespace {

// Raised for invalid flag combinations detected after parsing (exit 1).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MetricArgs {
  std::string method;
  std::string mode;
  double value = 0.0;
  std::optional<double> window_center;
  std::optional<double> window_width;
  int bins = 256;
  std::string embeddings;
  unsigned threads = 0;
};

const std::vector<std::string> kMethods = {"every-n", "ssim", "mi", "deepnet", "hash"};

void add_metric_flags(CLI::App *sub, MetricArgs &a, bool with_method) {
  if (with_method) {
    sub->add_option("--method", a.method, "every-n | ssim | mi | deepnet | hash")
        ->required()
        ->check(CLI::IsMember(kMethods));
  }
  sub->add_option("--window-center", a.window_center, "HU window center (e.g. 35)");
  sub->add_option("--window-width", a.window_width, "HU window width (e.g. 80)");
  sub->add_option("--bins", a.bins, "histogram bins for mi")->capture_default_str();
  sub->add_option("--embeddings", a.embeddings, "SSEB embedding file (required for deepnet)");
  sub->add_option("--threads", a.threads, "worker threads, 0 = all hardware threads")->capture_default_str();
}

void add_config(CLI::App *sub) {
  // Expanded before parsing; see expand_config.
  sub->add_option("--config")->description("JSON file with the same keys as the long flags");
}

std::optional<WindowSpec> window_from(const MetricArgs &a) {
  if (a.window_center.has_value() != a.window_width.has_value()) {
    throw UsageError("--window-center and --window-width must be given together");
  }
  if (!a.window_center) return std::nullopt;
  if (!(*a.window_width > 0.0)) throw UsageError("--window-width must be positive");
  return WindowSpec{*a.window_center, *a.window_width};
}

Mode mode_from(const std::string &mode, double value) {
  if (!std::isfinite(value)) throw UsageError("--value must be finite");
  if (mode == "fraction") {
    if (!(value > 0.0 && value <= 1.0)) throw UsageError("--mode fraction needs --value in (0, 1]");
    return mode::Fraction{value};
  }
  if (mode == "count") {
    if (value < 1.0 || value != std::floor(value) || value > 2147483647.0) {
      throw UsageError("--mode count needs an integer --value >= 1");
    }
    return mode::Count{static_cast<int>(value)};
  }
  if (mode == "threshold") return mode::Threshold{value};
  throw UsageError("unknown --mode " + mode);
}

// Builds reducer options for one method; `table` receives the embedding
// table when the method needs one and must outlive the options.
ReduceOptions options_for(const std::string &method_name, const std::string &mode_name, double value,
                          const MetricArgs &a, std::unique_ptr<EmbeddingTable> &table) {
  ReduceOptions o;
  o.mode = mode_from(mode_name, value);
  o.window = window_from(a);
  o.threads = a.threads;
  if (method_name == "every-n") {
    const auto *f = std::get_if<mode::Fraction>(&o.mode);
    if (!f) throw UsageError("--method every-n supports --mode fraction only");
    o.method = method::EveryN{every_n_stride(f->f)};
  } else if (method_name == "ssim") {
    o.method = method::Ssim{};
  } else if (method_name == "mi") {
    if (a.bins < 2 || a.bins > 256) throw UsageError("--bins must lie in [2, 256]");
    o.method = method::Mi{a.bins};
  } else if (method_name == "deepnet") {
    if (a.embeddings.empty()) throw UsageError("--method deepnet requires --embeddings <file.sseb>");
    o.method = method::DeepNet{a.embeddings};
    if (!table) table = std::make_unique<EmbeddingTable>(load_embeddings(a.embeddings));
    o.embeddings = table.get();
  } else if (method_name == "hash") {
    o.method = method::Hash{};
  } else {
    throw UsageError("unknown --method " + method_name);
  }
  return o;
}

fs::path provenance_path(const std::string &arg) {
  fs::path p(arg);
  if (fs::is_directory(p)) return p / "provenance.json";
  return p;
}

void write_text(const fs::path &path, const std::string &text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  f << text;
  if (!f) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

struct LoadedManifest {
  fs::path path;
  std::vector<SliceRef> entries;
  std::vector<VolumeSeries> volumes;
  std::string digest;
};

LoadedManifest load_validated(const std::string &path) {
  LoadedManifest m;
  m.path = fs::absolute(path).lexically_normal();
  m.entries = load_manifest(m.path);
  m.volumes = validate_manifest(m.entries);
  m.digest = "sha256:" + sha256_file(m.path);
  return m;
}

// Writes <out>/reduced.jsonl and <out>/provenance.json for one plan.
std::string write_outputs(const fs::path &out_dir, const LoadedManifest &manifest, const ReductionPlan &plan,
                          const ReduceOptions &options, const PhaseTimes &times, const std::string &bench = {}) {
  fs::create_directories(out_dir);
  auto kept = apply_plan(plan, manifest.entries);
  for (auto &ref : kept) ref.path = rebase_slice_path(manifest.path, ref, out_dir);
  write_manifest(out_dir / "reduced.jsonl", kept);

  Provenance p;
  p.plan = plan;
  p.input_manifest = manifest.path.string();
  p.input_manifest_digest = manifest.digest;
  p.plan_digest = plan_digest(plan);
  p.window = options.window;
  p.phases = times;
  p.bench_csv = bench;
  write_provenance(out_dir / "provenance.json", p);
  return p.plan_digest;
}

// --- reduce ----------------------------------------------------------------

struct ReduceArgs {
  MetricArgs metric;
  std::string manifest;
  std::string out;
};

int cmd_reduce(const ReduceArgs &a, std::ostream &out) {
  std::unique_ptr<EmbeddingTable> table;
  const auto options = options_for(a.metric.method, a.metric.mode, a.metric.value, a.metric, table);
  const auto manifest = load_validated(a.manifest);

  PhaseTimes times;
  const auto plan = reduce_dataset(manifest.path, manifest.volumes, options, &times);
  const auto digest = write_outputs(a.out, manifest, plan, options, times);

  const auto s = stats(plan);
  char line[256];
  std::snprintf(line, sizeof line, "kept %zu of %zu slices (%.4f) in %zu volumes; plan %s\n", s.kept, s.slices,
                s.kept_fraction, s.volumes.size(), digest.c_str());
  out << line;
  return kExitOk;
}

// --- compare ---------------------------------------------------------------

struct CompareArgs {
  std::vector<std::string> plans;
  std::string out;
};

int cmd_compare(const CompareArgs &a, std::ostream &out) {
  if (a.plans.size() < 2) throw UsageError("compare needs at least two plan directories");
  std::vector<Provenance> loaded;
  for (const auto &p : a.plans) loaded.push_back(read_provenance(provenance_path(p)));
  for (std::size_t i = 1; i < loaded.size(); ++i) {
    if (loaded[i].input_manifest_digest != loaded[0].input_manifest_digest) {
      throw Error(ErrorCode::ManifestMismatch,
                  a.plans[i] + " was reduced from a different manifest than " + a.plans[0]);
    }
  }
  auto reports = nlohmann::json::array();
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    for (std::size_t j = i + 1; j < loaded.size(); ++j) {
      auto r = nlohmann::json::parse(overlap_json(overlap(loaded[i].plan, loaded[j].plan)));
      r["plan_a"] = a.plans[i];
      r["plan_b"] = a.plans[j];
      reports.push_back(std::move(r));
    }
  }
  const auto text = reports.dump(2) + "\n";
  if (!a.out.empty()) write_text(a.out, text);
  out << text;
  return kExitOk;
}

// --- stats -----------------------------------------------------------------

struct StatsArgs {
  std::string plan;
  bool scores = false;
  std::string manifest;
  int bins = 20;
  unsigned threads = 0;
};

int cmd_stats(const StatsArgs &a, std::ostream &out) {
  const auto prov = read_provenance(provenance_path(a.plan));
  auto s = stats(prov.plan);
  if (a.scores) {
    if (std::holds_alternative<method::EveryN>(prov.plan.method)) {
      throw UsageError("--scores needs a plan produced by a similarity metric");
    }
    const auto manifest = load_validated(a.manifest.empty() ? prov.input_manifest : a.manifest);
    ReduceOptions o;
    o.method = prov.plan.method;
    o.mode = prov.plan.mode;
    o.window = prov.window;
    o.threads = a.threads;
    std::unique_ptr<EmbeddingTable> table;
    if (const auto *d = std::get_if<method::DeepNet>(&o.method)) {
      table = std::make_unique<EmbeddingTable>(load_embeddings(d->embeddings));
      o.embeddings = table.get();
    }
    s.kept_scores = kept_score_histogram(prov.plan, manifest.path, manifest.volumes, o, a.bins);
  }
  out << stats_json(s) << "\n";
  return kExitOk;
}

// --- bench -----------------------------------------------------------------

struct BenchArgs {
  MetricArgs metric;
  std::string manifest;
  std::vector<std::string> methods;
  int repetitions = 3;
  std::string csv;
  std::string out;
};

int cmd_bench(const BenchArgs &a, std::ostream &out) {
  if (a.repetitions < 1) throw UsageError("--repetitions must be at least 1");
  std::unique_ptr<EmbeddingTable> table;
  for (const auto &m : a.methods) {
    if (m == "deepnet" && a.metric.embeddings.empty()) {
      throw UsageError("--methods deepnet requires --embeddings <file.sseb>");
    }
  }
  const auto manifest = load_validated(a.manifest);
  std::vector<ReduceOptions> options;
  for (const auto &m : a.methods) options.push_back(options_for(m, a.metric.mode, a.metric.value, a.metric, table));

  const auto result = bench(manifest.path, manifest.volumes, options, a.repetitions);
  const auto csv = bench_csv(result.rows);
  if (!a.csv.empty()) write_text(a.csv, csv);
  if (!a.out.empty()) {
    for (std::size_t i = 0; i < options.size(); ++i) {
      write_outputs(fs::path(a.out) / a.methods[i], manifest, result.plans[i], options[i], result.phases[i], csv);
    }
  }
  out << csv;
  return kExitOk;
}

// --- hash-dump -------------------------------------------------------------

struct HashDumpArgs {
  MetricArgs metric;
  std::string manifest;
  std::vector<std::string> images;
};

int cmd_hash_dump(const HashDumpArgs &a, std::ostream &out) {
  if (a.manifest.empty() == a.images.empty()) throw UsageError("give either --manifest or image paths");
  const auto window = window_from(a.metric);
  if (!a.images.empty()) {
    for (const auto &path : a.images) {
      const SliceRef ref{"", 0, path, 1.0, 0.0};
      const auto hash = dhash(apply_window(decode_slice(path, ref), window));
      if (a.images.size() == 1) {
        out << hash.hex() << "\n";
      } else {
        out << path << "\t" << hash.hex() << "\n";
      }
    }
    return kExitOk;
  }
  const auto manifest = load_validated(a.manifest);
  for (const auto &volume : manifest.volumes) {
    for (const auto &ref : volume.slices) {
      out << slice_key(ref) << "\t" << dhash(load_slice_image(manifest.path, ref, window)).hex() << "\n";
    }
  }
  return kExitOk;
}

// --- synth -----------------------------------------------------------------

struct SynthArgs {
  SynthOptions options;
  std::string out;
};

int cmd_synth(const SynthArgs &a, std::ostream &out) {
  const auto &o = a.options;
  if (o.volumes < 1 || o.slices < 1 || o.width < 1 || o.height < 1) {
    throw UsageError("--volumes, --slices, --width and --height must be positive");
  }
  if (o.min_slices < 0 || o.min_slices > o.slices) throw UsageError("--min-slices must lie in [0, --slices]");
  if (o.bit_depth != 8 && o.bit_depth != 16) throw UsageError("--bit-depth must be 8 or 16");
  if (o.noise < 0.0) throw UsageError("--noise must be non-negative");
  const auto refs = synth_corpus(a.out, o);
  out << "wrote " << refs.size() << " slices to " << (fs::path(a.out) / "manifest.jsonl").string() << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Near-duplicate slice reduction for volumetric pre-training datasets", "slicereduce"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tool_version());

  ReduceArgs reduce;
  auto *sub_reduce = app.add_subcommand("reduce", "reduce a manifest with one method");
  sub_reduce->add_option("--manifest", reduce.manifest, "input JSON Lines manifest")->required();
  add_metric_flags(sub_reduce, reduce.metric, true);
  sub_reduce->add_option("--mode", reduce.metric.mode, "fraction | count | threshold")
      ->required()
      ->check(CLI::IsMember({"fraction", "count", "threshold"}));
  sub_reduce->add_option("--value", reduce.metric.value, "fraction, slice count or threshold")->required();
  sub_reduce->add_option("--out", reduce.out, "output directory")->required();
  add_config(sub_reduce);

  CompareArgs compare;
  auto *sub_compare = app.add_subcommand("compare", "overlap between reduced datasets");
  sub_compare->add_option("plans", compare.plans, "plan directories (or provenance.json files)");
  sub_compare->add_option("--out", compare.out, "also write the JSON report here");
  add_config(sub_compare);

  StatsArgs stats_args;
  auto *sub_stats = app.add_subcommand("stats", "kept/removed summary of a plan");
  sub_stats->add_option("plan", stats_args.plan, "plan directory or provenance.json")->required();
  sub_stats->add_flag("--scores", stats_args.scores, "add a histogram of kept-pair scores");
  sub_stats->add_option("--manifest", stats_args.manifest, "manifest to rescore (default: the plan's input)");
  sub_stats->add_option("--bins", stats_args.bins, "histogram bins for real-valued metrics")->capture_default_str();
  sub_stats->add_option("--threads", stats_args.threads, "worker threads, 0 = all hardware threads");
  add_config(sub_stats);

  BenchArgs bench_args;
  bench_args.metric.mode = "fraction";
  bench_args.metric.value = 0.1;
  auto *sub_bench = app.add_subcommand("bench", "time reduction methods on a manifest");
  sub_bench->add_option("--manifest", bench_args.manifest, "input JSON Lines manifest")->required();
  sub_bench->add_option("--methods", bench_args.methods, "comma-separated methods")
      ->required()
      ->delimiter(',')
      ->check(CLI::IsMember(kMethods));
  sub_bench->add_option("--repetitions", bench_args.repetitions, "runs per method")->capture_default_str();
  add_metric_flags(sub_bench, bench_args.metric, false);
  sub_bench->add_option("--mode", bench_args.metric.mode, "fraction | count | threshold")
      ->capture_default_str()
      ->check(CLI::IsMember({"fraction", "count", "threshold"}));
  sub_bench->add_option("--value", bench_args.metric.value, "mode value")->capture_default_str();
  sub_bench->add_option("--csv", bench_args.csv, "also write the CSV table here");
  sub_bench->add_option("--out", bench_args.out, "write per-method plans with the table embedded");
  add_config(sub_bench);

  HashDumpArgs hash_args;
  auto *sub_hash = app.add_subcommand("hash-dump", "print 64-bit difference hashes");
  sub_hash->add_option("--manifest", hash_args.manifest, "hash every slice of a manifest");
  sub_hash->add_option("images", hash_args.images, "PNG files to hash");
  sub_hash->add_option("--window-center", hash_args.metric.window_center, "HU window center");
  sub_hash->add_option("--window-width", hash_args.metric.window_width, "HU window width");
  add_config(sub_hash);

  SynthArgs synth;
  auto *sub_synth = app.add_subcommand("synth", "write a seeded synthetic corpus");
  sub_synth->add_option("--out", synth.out, "output directory")->required();
  sub_synth->add_option("--volumes", synth.options.volumes)->capture_default_str();
  sub_synth->add_option("--slices", synth.options.slices, "slices per volume (maximum)")->capture_default_str();
  sub_synth->add_option("--min-slices", synth.options.min_slices, "draw per-volume counts from [min, slices]");
  sub_synth->add_option("--width", synth.options.width)->capture_default_str();
  sub_synth->add_option("--height", synth.options.height)->capture_default_str();
  sub_synth->add_option("--seed", synth.options.seed)->capture_default_str();
  sub_synth->add_option("--bit-depth", synth.options.bit_depth, "8 or 16")->capture_default_str();
  sub_synth->add_option("--noise", synth.options.noise, "peak noise in gray levels")->capture_default_str();
  add_config(sub_synth);

  std::vector<std::string> storage;
  storage.emplace_back("slicereduce");
  storage.insert(storage.end(), args.begin(), args.end());
  for (std::size_t i = 1; i < storage.size(); ++i) {
    if (storage[i].rfind("-", 0) == 0) continue;
    if (const auto *sub = app.get_subcommand_no_throw(storage[i])) {
      try {
        storage = expand_config(*sub, storage, i);
      } catch (const ConfigError &e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
      }
    }
    break;
  }
  std::vector<char *> argv;
  for (auto &s : storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*sub_reduce) return cmd_reduce(reduce, out);
    if (*sub_compare) return cmd_compare(compare, out);
    if (*sub_stats) return cmd_stats(stats_args, out);
    if (*sub_bench) return cmd_bench(bench_args, out);
    if (*sub_hash) return cmd_hash_dump(hash_args, out);
    if (*sub_synth) return cmd_synth(synth, out);
  } catch (const UsageError &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace slicereduce::cli
