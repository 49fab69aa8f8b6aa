#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace coad {

enum ExitCode : int { kExitOk = 0, kExitInput = 2, kExitDivergence = 3 };

/// Entry point of the `coad` tool. `args` excludes the program name.
/// Subcommands: simulate, analyze, train-toy, theta-star.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace coad
