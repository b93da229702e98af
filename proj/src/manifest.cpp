#include "slicereduce/manifest.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "slicereduce/error.hpp"

namespace slicereduce {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<VolumeSeries> validate_manifest(std::span<const SliceRef> entries) {
  if (entries.empty()) throw Error(ErrorCode::EmptyManifest, "manifest has no entries");

  std::map<std::string, std::vector<SliceRef>> grouped;
  for (const auto &ref : entries) {
    if (ref.path.empty()) {
      throw Error(ErrorCode::MissingField, "empty path for slice " + slice_key(ref));
    }
    if (ref.slice_index < 0) {
      throw Error(ErrorCode::NonContiguousIndices,
                  "volume " + ref.volume_id + ": negative slice_index " + std::to_string(ref.slice_index));
    }
    grouped[ref.volume_id].push_back(ref);
  }

  std::vector<VolumeSeries> volumes;
  volumes.reserve(grouped.size());
  for (auto &[id, slices] : grouped) {
    std::stable_sort(slices.begin(), slices.end(),
                     [](const SliceRef &l, const SliceRef &r) { return l.slice_index < r.slice_index; });
    for (std::size_t i = 1; i < slices.size(); ++i) {
      if (slices[i].slice_index == slices[i - 1].slice_index) {
        throw Error(ErrorCode::DuplicateIndex,
                    "volume " + id + " lists slice_index " + std::to_string(slices[i].slice_index) + " twice");
      }
    }
    for (std::size_t i = 0; i < slices.size(); ++i) {
      if (slices[i].slice_index != static_cast<int>(i)) {
        throw Error(ErrorCode::NonContiguousIndices,
                    "volume " + id + ": expected slice_index " + std::to_string(i) + ", found " +
                        std::to_string(slices[i].slice_index));
      }
    }
    volumes.push_back(VolumeSeries{id, std::move(slices)});
  }
  return volumes;
}

namespace {

SliceRef parse_line(const std::string &line, std::size_t line_no) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error &e) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!obj.is_object()) throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": not an object");

  auto require = [&](const char *field) -> const json & {
    auto it = obj.find(field);
    if (it == obj.end() || it->is_null()) {
      throw Error(ErrorCode::MissingField, "line " + std::to_string(line_no) + ": missing \"" + field + "\"");
    }
    return *it;
  };
  auto type_error = [&](const char *field, const char *expected) {
    return Error(ErrorCode::ParseError,
                 "line " + std::to_string(line_no) + ": \"" + field + "\" must be " + expected);
  };

  SliceRef ref;
  const auto &vid = require("volume_id");
  if (!vid.is_string()) throw type_error("volume_id", "a string");
  ref.volume_id = vid.get<std::string>();

  const auto &idx = require("slice_index");
  if (!idx.is_number_integer()) throw type_error("slice_index", "an integer");
  const auto raw = idx.get<std::int64_t>();
  if (raw < 0 || raw > std::numeric_limits<int>::max()) {
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line_no) + ": slice_index " + std::to_string(raw) + " out of range");
  }
  ref.slice_index = static_cast<int>(raw);

  const auto &path = require("path");
  if (!path.is_string()) throw type_error("path", "a string");
  ref.path = path.get<std::string>();
  if (ref.path.empty()) {
    throw Error(ErrorCode::MissingField, "line " + std::to_string(line_no) + ": \"path\" is empty");
  }

  if (auto it = obj.find("rescale_slope"); it != obj.end() && !it->is_null()) {
    if (!it->is_number()) throw type_error("rescale_slope", "a number");
    ref.rescale_slope = it->get<double>();
  }
  if (auto it = obj.find("rescale_intercept"); it != obj.end() && !it->is_null()) {
    if (!it->is_number()) throw type_error("rescale_intercept", "a number");
    ref.rescale_intercept = it->get<double>();
  }
  return ref;
}

}  // namespace

std::vector<SliceRef> parse_manifest(std::string_view text) {
  std::vector<SliceRef> refs;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    refs.push_back(parse_line(line, line_no));
  }
  if (refs.empty()) throw Error(ErrorCode::EmptyManifest, "manifest has no entries");
  return refs;
}

std::vector<SliceRef> load_manifest(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open manifest " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::IoError, "failed reading manifest " + path.string());
  return parse_manifest(buf.str());
}

std::string manifest_line(const SliceRef &ref) {
  json obj = json::object();
  obj["volume_id"] = ref.volume_id;
  obj["slice_index"] = ref.slice_index;
  obj["path"] = ref.path;
  obj["rescale_slope"] = ref.rescale_slope;
  obj["rescale_intercept"] = ref.rescale_intercept;
  return obj.dump();
}

void write_manifest(const fs::path &path, std::span<const SliceRef> entries) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write manifest " + path.string());
  for (const auto &ref : entries) out << manifest_line(ref) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "failed writing manifest " + path.string());
}

fs::path resolve_slice_path(const fs::path &manifest_path, const SliceRef &ref) {
  fs::path p(ref.path);
  if (p.is_absolute()) return p.lexically_normal();
  return (fs::absolute(manifest_path).parent_path() / p).lexically_normal();
}

std::string rebase_slice_path(const fs::path &manifest_path, const SliceRef &ref, const fs::path &new_dir) {
  fs::path p(ref.path);
  if (p.is_absolute()) return ref.path;
  auto target = resolve_slice_path(manifest_path, ref);
  auto base = fs::absolute(new_dir).lexically_normal();
  if (base.filename().empty()) base = base.parent_path();
  auto rel = target.lexically_relative(base);
  if (rel.empty()) return target.string();
  return rel.generic_string();
}

}  // namespace slicereduce
