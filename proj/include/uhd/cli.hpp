#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace uhd {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitDiverged = 4;

/// Runs the `uhd` command line. args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace uhd
