#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace siph::cli {

/// Exit codes: 0 pass, 1 property violated or inconclusive (the report then
/// holds at least one witness), 2 usage, parse or I/O error.
inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command. `args` excludes the program name. Reports go to `out`
/// unless --out names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace siph::cli
