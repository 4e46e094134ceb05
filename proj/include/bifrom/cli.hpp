#pragma once

#include <string>
#include <vector>

#include "bifrom/error.hpp"

namespace bifrom::pipeline {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitConvergence = 3;
inline constexpr int kExitMissing = 4;

int exit_code_for(ErrorCode code);

// Entry point of the `bifrom` tool; args exclude the program name. All
// diagnostics go to standard error.
int run_cli(const std::vector<std::string>& args);

}  // namespace bifrom::pipeline
