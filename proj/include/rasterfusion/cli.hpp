#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rasterfusion {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Runs one subcommand (synth, fuse, render, train, predict, eval). `args`
/// excludes the program name. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rasterfusion
