#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace regmod::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumerical = 2;

/// Runs one regmod command. args excludes the program name. The JSON report
/// goes to `out` unless --out is given; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace regmod::cli
