#pragma once

#include <iosfwd>

namespace nls {

enum ExitCode { exit_ok = 0, exit_config = 1, exit_inadmissible = 2, exit_not_converged = 3, exit_partial = 4 };

// nls-norm check|solve|sweep|gn|oracle --config <path> [--out <path>] [--dry-run]
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nls
