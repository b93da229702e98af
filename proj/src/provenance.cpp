#include "slicereduce/provenance.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "slicereduce/digest.hpp"
#include "slicereduce/error.hpp"

namespace slicereduce {

using nlohmann::json;

namespace {

std::string fmt_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json method_json(const Method &m) {
  json j = {{"name", method_name(m)}};
  if (const auto *e = std::get_if<method::EveryN>(&m)) j["n"] = e->n;
  if (const auto *mi = std::get_if<method::Mi>(&m)) j["bins"] = mi->bins;
  if (const auto *d = std::get_if<method::DeepNet>(&m)) j["embeddings"] = d->embeddings.string();
  return j;
}

Method method_from_json(const json &j) {
  const auto name = j.at("name").get<std::string>();
  if (name == "every-n") return method::EveryN{j.at("n").get<int>()};
  if (name == "ssim") return method::Ssim{};
  if (name == "mi") return method::Mi{j.at("bins").get<int>()};
  if (name == "deepnet") return method::DeepNet{j.at("embeddings").get<std::string>()};
  if (name == "hash") return method::Hash{};
  throw Error(ErrorCode::ParseError, "unknown method \"" + name + "\" in provenance");
}

Mode mode_from_json(const json &j) {
  const auto name = j.at("name").get<std::string>();
  const double v = j.at("value").get<double>();
  if (name == "fraction") return mode::Fraction{v};
  if (name == "count") return mode::Count{static_cast<int>(v)};
  if (name == "threshold") return mode::Threshold{v};
  throw Error(ErrorCode::ParseError, "unknown mode \"" + name + "\" in provenance");
}

}  // namespace

std::string plan_digest(const ReductionPlan &plan) {
  std::ostringstream s;
  s << "method=" << method_name(plan.method);
  if (const auto *e = std::get_if<method::EveryN>(&plan.method)) s << ";n=" << e->n;
  if (const auto *mi = std::get_if<method::Mi>(&plan.method)) s << ";bins=" << mi->bins;
  s << "\nmode=" << mode_name(plan.mode) << ":" << fmt_real(mode_value(plan.mode)) << "\n";
  for (const auto &vp : plan.volumes) {
    s << vp.volume_id << "|" << vp.slice_count << "|kept:";
    for (int i : vp.kept) s << i << ",";
    s << "|removed:";
    for (int i : vp.removed) s << i << ",";
    s << "|log:";
    for (const auto &r : vp.removals) s << r.index << "<" << r.partner << "@" << fmt_real(r.score) << ",";
    s << "\n";
  }
  return sha256_hex(s.str());
}

std::string provenance_json(const Provenance &p) {
  const auto &plan = p.plan;
  json j;
  j["tool_version"] = plan.tool_version;
  j["method"] = method_json(plan.method);
  j["mode"] = {{"name", mode_name(plan.mode)}, {"value", mode_value(plan.mode)}};
  j["policy"] = {{"drop", "higher_index"},
                 {"tie_break", "ascending_a_then_b"},
                 {"threshold_comparison", "strict"},
                 {"fraction_rounding", "half_up_min_1"}};
  j["window"] = p.window ? json{{"center", p.window->center}, {"width", p.window->width}} : json(nullptr);
  j["input_manifest"] = p.input_manifest;
  j["input_manifest_digest"] = p.input_manifest_digest;
  j["plan_digest"] = p.plan_digest.empty() ? plan_digest(plan) : p.plan_digest;

  json timing = {{"scoring_seconds", plan.scoring_seconds}, {"selection_seconds", plan.selection_seconds}};
  if (p.phases) {
    timing["phases"] = {{"decode", p.phases->decode},
                        {"features", p.phases->features},
                        {"compare", p.phases->compare},
                        {"select", p.phases->select},
                        {"pairs", p.phases->pairs}};
  }
  j["timing"] = timing;

  std::size_t total = 0, kept = 0;
  json vols = json::array();
  for (const auto &vp : plan.volumes) {
    total += static_cast<std::size_t>(vp.slice_count);
    kept += vp.kept.size();
    json removals = json::array();
    for (const auto &r : vp.removals) removals.push_back({r.index, r.partner, r.score});
    vols.push_back({{"volume_id", vp.volume_id},
                    {"slices", vp.slice_count},
                    {"kept_count", vp.kept.size()},
                    {"removed_count", vp.removed.size()},
                    {"kept", vp.kept},
                    {"removed", vp.removed},
                    {"removals", removals}});
  }
  j["totals"] = {{"slices", total}, {"kept", kept}, {"removed", total - kept}};
  j["volumes"] = vols;
  if (!p.bench_csv.empty()) j["bench_csv"] = p.bench_csv;
  return j.dump(2) + "\n";
}

void write_provenance(const std::filesystem::path &path, const Provenance &p) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << provenance_json(p);
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

Provenance read_provenance(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  Provenance p;
  try {
    const json j = json::parse(in);
    p.plan.tool_version = j.at("tool_version").get<std::string>();
    p.plan.method = method_from_json(j.at("method"));
    p.plan.mode = mode_from_json(j.at("mode"));
    p.input_manifest = j.at("input_manifest").get<std::string>();
    p.input_manifest_digest = j.at("input_manifest_digest").get<std::string>();
    p.plan_digest = j.at("plan_digest").get<std::string>();
    if (!j.at("window").is_null()) {
      p.window = WindowSpec{j["window"].at("center").get<double>(), j["window"].at("width").get<double>()};
    }
    p.plan.scoring_seconds = j.at("timing").at("scoring_seconds").get<double>();
    p.plan.selection_seconds = j.at("timing").at("selection_seconds").get<double>();
    for (const auto &v : j.at("volumes")) {
      VolumePlan vp;
      vp.volume_id = v.at("volume_id").get<std::string>();
      vp.slice_count = v.at("slices").get<int>();
      vp.kept = v.at("kept").get<std::vector<int>>();
      vp.removed = v.at("removed").get<std::vector<int>>();
      for (const auto &r : v.at("removals")) {
        vp.removals.push_back(Removal{r.at(0).get<int>(), r.at(1).get<int>(), r.at(2).get<double>()});
      }
      p.plan.volumes.push_back(std::move(vp));
    }
    if (auto it = j.find("bench_csv"); it != j.end()) p.bench_csv = it->get<std::string>();
  } catch (const json::exception &e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  return p;
}

}  // namespace slicereduce
