#pragma once

// Entry point of the semidi command-line tool, callable in-process.

#include <iosfwd>
#include <string>
#include <vector>

namespace semidi {

/// Parses args (without the program name), runs the subcommand and returns the
/// process exit code. Reports go to out, diagnostics to err.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace semidi
