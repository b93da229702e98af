#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace slicereduce {

enum class ErrorCode {
  EmptyManifest,
  DuplicateIndex,
  NonContiguousIndices,
  IoError,
  ParseError,
  MissingField,
  UnsupportedFormat,
  DimensionMismatch,
  ImageTooSmall,
  DegenerateHistogram,
  ZeroVector,
  BadMagic,
  UnsupportedVersion,
  TruncatedFile,
  DuplicateKey,
  MissingEmbedding,
  InvalidTarget,
  InvalidArgument,
  PlanManifestMismatch,
  ManifestMismatch,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (and the CLI exit-code mapping) can branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code), detail_(detail) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string &detail() const noexcept { return detail_; }

  // Same error with "context: " prepended to the detail.
  Error with_context(const std::string &context) const { return Error(code_, context + ": " + detail_); }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace slicereduce
