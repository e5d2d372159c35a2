#ifndef ALIGNKIT_CLI_HPP
#define ALIGNKIT_CLI_HPP

#include <string>
#include <vector>

namespace alignkit {

/// Runs one CLI invocation. `args` excludes the program name. The report
/// goes to `out` (or the --out path), diagnostics to `err`. Exit codes:
/// 0 success, 1 assertion-flag failure, 2 input error, 3 numerical
/// non-convergence.
int run_command(const std::vector<std::string>& args, std::string& out, std::string& err);

} // namespace alignkit

#endif
