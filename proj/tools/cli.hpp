#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace repsample::cli {

enum ExitCode : int {
    kSuccess = 0,
    kDataError = 1,
    kUsageError = 2,
};

/// Runs one subcommand (sample | cluster | eval). `args[0]` is the program
/// name. Diagnostics go to `err` as a single line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace repsample::cli
