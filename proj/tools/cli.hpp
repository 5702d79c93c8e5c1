#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tde::cli {

enum ExitCode : int {
    kSuccess = 0,
    kUsageError = 1,
    kDataError = 2,
    kPartialFailure = 3,
};

// Runs the command line (args excludes the program name) and returns the
// process exit code. Harness parallelism is capped by TDE_THREADS.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tde::cli
