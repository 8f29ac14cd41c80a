#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace stg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Runs the command line `args` (without the program name). Subcommands:
/// denoise, addnoise, bench, eval. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stg::cli
