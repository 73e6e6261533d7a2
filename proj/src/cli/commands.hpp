#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fdakit::cli {

/// Process exit codes shared by every subcommand.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitData = 2,
    kExitNumerical = 3,
};

/// Runs the command line `args` (program name excluded).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fdakit::cli
