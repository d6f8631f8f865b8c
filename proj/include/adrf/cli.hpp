#pragma once

#include <string>
#include <vector>

namespace adrf::cli {

enum ExitCode : int
{
  kSuccess = 0,
  kInputError = 2,
  kConfigError = 3,
  kNumericalFailure = 4,
};

//! Runs the command line; args excludes the program name.
int run(const std::vector<std::string>& args);

} // namespace adrf::cli
