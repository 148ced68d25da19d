#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace egcn::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

/// Runs one command line (args[0] is the program name) and returns the exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace egcn::cli
