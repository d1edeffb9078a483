#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kgintent::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kDiverged = 3 };

// Runs one verb. args excludes the program name. Human summaries go to out,
// diagnostics and usage to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kgintent::cli
