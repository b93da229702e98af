#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace slicereduce::cli {

// Exit codes: 0 success, 1 usage or configuration error, 2 data or
// runtime error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Runs one invocation; args excludes the program name.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace slicereduce::cli
