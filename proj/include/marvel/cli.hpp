#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace marvel {

enum ExitCode : int {
  kExitOk = 0,
  kExitCorrectness = 1,
  kExitUsage = 2,
  kExitTrap = 3,
};

/// Runs the `marvel` command line; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace marvel
