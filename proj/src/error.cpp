#include "slicereduce/error.hpp"

namespace slicereduce {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyManifest: return "EmptyManifest";
    case ErrorCode::DuplicateIndex: return "DuplicateIndex";
    case ErrorCode::NonContiguousIndices: return "NonContiguousIndices";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::DegenerateHistogram: return "DegenerateHistogram";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::DuplicateKey: return "DuplicateKey";
    case ErrorCode::MissingEmbedding: return "MissingEmbedding";
    case ErrorCode::InvalidTarget: return "InvalidTarget";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::PlanManifestMismatch: return "PlanManifestMismatch";
    case ErrorCode::ManifestMismatch: return "ManifestMismatch";
  }
  return "Unknown";
}

}  // namespace slicereduce
