#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

namespace slicereduce::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Rewrites `<sub> ... --config run.json ...` into the equivalent flag list.
// The file is a flat JSON object keyed by long flag names (or positional
// names), e.g. {"method": "hash", "mode": "threshold", "value": 6}. Arrays
// become repeated values, booleans toggle flags. Flags already given on the
// command line win over the file. `sub_pos` is the index of the subcommand
// name in args.
std::vector<std::string> expand_config(const CLI::App &sub, const std::vector<std::string> &args,
                                       std::size_t sub_pos);

}  // namespace slicereduce::cli
