#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "slicereduce/ingest.hpp"
#include "slicereduce/reducer.hpp"
#include "slicereduce/types.hpp"

namespace slicereduce {

// SHA-256 over a canonical text form of the selection (method, mode,
// per-volume kept/removed sets and removal order). Timings and paths are
// excluded, so equal selections have equal digests.
std::string plan_digest(const ReductionPlan &plan);

struct Provenance {
  ReductionPlan plan;
  std::string input_manifest;
  std::string input_manifest_digest;
  std::string plan_digest;
  std::optional<WindowSpec> window;
  std::optional<PhaseTimes> phases;
  std::string bench_csv;  // optional embedded benchmark table
};

// Sidecar JSON: method, mode and value, selection policy, window, input
// manifest digest, plan digest, timings, totals and per-volume kept and
// removed indices with the removal log.
std::string provenance_json(const Provenance &p);
void write_provenance(const std::filesystem::path &path, const Provenance &p);
Provenance read_provenance(const std::filesystem::path &path);

}  // namespace slicereduce
