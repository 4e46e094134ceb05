#pragma once

#include <stdexcept>
#include <string>

namespace bifrom {

enum class ErrorCode {
  InvalidConfig,
  NonFinite,
  NoConvergence,
  SingularJacobian,
  ZeroSnapshots,
  InvalidK,
  DimensionMismatch,
  MissingArtifact,
  BadMagic,
  TruncatedFile,
  IoFailure,
};

const char* to_string(ErrorCode code);

// Single exception type for the library; the code tells callers (and the CLI
// exit-code mapping) what went wrong.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace bifrom
