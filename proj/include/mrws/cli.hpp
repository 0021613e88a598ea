#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mrws::cli {

enum ExitCode : int { ok = 0, config_error = 2, no_convergence = 3, property_violation = 4 };

/// Runs one subcommand. `args` excludes the program name. Reports go to
/// `out`; failures are written to `err` as one JSON object per line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mrws::cli
