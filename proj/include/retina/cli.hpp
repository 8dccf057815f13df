#pragma once

// Command-line front end. Exit codes are a stable scripting contract:
//   0 success, 1 usage, 2 I/O or data, 3 numeric, 4 check failure.

#include <ostream>
#include <string>
#include <vector>

namespace retina::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitData = 2,
    kExitNumeric = 3,
    kExitCheckFailed = 4,
};

/// Runs the CLI with `args` (argv without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace retina::cli
