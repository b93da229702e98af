#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "slicereduce/types.hpp"

namespace slicereduce {

// Groups entries by volume_id (volumes ordered by id, slices by index) and
// checks that every volume holds indices 0..m-1 exactly once.
std::vector<VolumeSeries> validate_manifest(std::span<const SliceRef> entries);

// JSON Lines manifest: one {"volume_id","slice_index","path",
// "rescale_slope"?, "rescale_intercept"?} object per line, in file order.
std::vector<SliceRef> load_manifest(const std::filesystem::path &path);
std::vector<SliceRef> parse_manifest(std::string_view text);

std::string manifest_line(const SliceRef &ref);
void write_manifest(const std::filesystem::path &path, std::span<const SliceRef> entries);

// Absolute location of a slice image; relative paths are taken relative to
// the directory holding the manifest.
std::filesystem::path resolve_slice_path(const std::filesystem::path &manifest_path, const SliceRef &ref);

// Rewrites a (possibly relative) manifest path so it still points at the
// same file when written into a manifest stored under new_dir.
std::string rebase_slice_path(const std::filesystem::path &manifest_path, const SliceRef &ref,
                              const std::filesystem::path &new_dir);

}  // namespace slicereduce
