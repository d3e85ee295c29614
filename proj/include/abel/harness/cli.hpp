#pragma once

#include <string>
#include <vector>

namespace abel::harness {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitDiverged = 3,
  kExitResumeRefused = 4,
};

// Entry point of the `abel` command line tool. args excludes the program name.
int cli_main(const std::vector<std::string>& args);

}  // namespace abel::harness
