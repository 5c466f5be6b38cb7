#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gazekit::cli {

enum ExitCode : int { kOk = 0, kUsageError = 1, kPartialFailure = 2 };

/// Runs the gazekit command line. `args` excludes the program name. Data
/// goes to `out`, logging to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gazekit::cli
