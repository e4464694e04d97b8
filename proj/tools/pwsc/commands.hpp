#pragma once

#include <string>
#include <vector>

namespace pwsc::cli {

enum ExitCode : int { kOk = 0, kNumericFailure = 1, kConfigError = 2 };

struct CliResult {
  int exit_code = kOk;
  std::string out;  // summary lines
  std::string err;  // diagnostics
};

// Runs one invocation (args exclude the program name). Output files are
// written under --out only after the command has finished successfully.
CliResult run(const std::vector<std::string>& args);

}  // namespace pwsc::cli
