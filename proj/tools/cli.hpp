#pragma once

#include <string>
#include <vector>

namespace arapdepth::cli {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kSuccess = 0,
  kInputError = 1,
  kNumericalFailure = 2,
  kUnusablePrior = 3,
};

/// Parses and executes one invocation; diagnostics go to stderr.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);  // args[0] is the program name

}  // namespace arapdepth::cli
