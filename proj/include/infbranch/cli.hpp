#pragma once

#include <iosfwd>

namespace infbranch {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitInputError = 1,
  kExitNoConvergence = 2,
  kExitInvariant = 3,
};

/// Entry point of the `infbranch` tool; argv[0] is the program name.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace infbranch
