#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace servingbench::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitThreshold = 1;
inline constexpr int kExitUsage = 2;

/// Runs one `servingbench` command line; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace servingbench::cli
