#include "bifrom/error.hpp"

namespace bifrom {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::SingularJacobian: return "SingularJacobian";
    case ErrorCode::ZeroSnapshots: return "ZeroSnapshots";
    case ErrorCode::InvalidK: return "InvalidK";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MissingArtifact: return "MissingArtifact";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

}  // namespace bifrom
