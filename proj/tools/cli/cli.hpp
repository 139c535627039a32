#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lmroute::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kInputError = 2,
  kNumericalError = 3,
  kInfeasible = 4,
};

// Runs one command line; args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lmroute::cli
