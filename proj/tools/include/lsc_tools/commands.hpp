#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lsc::tools {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Entry point of the `lsc` executable; args excludes the program name.
/// Subcommands: gen-world, run, eval.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lsc::tools
