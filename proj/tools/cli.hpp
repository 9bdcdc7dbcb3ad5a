#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nosignal::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitEvaluation = 3;

/// Runs one command line (args excludes the program name). Results go to
/// --out or `out`; diagnostics and, without --out, the run manifest go to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int dispatch(int argc, char** argv);

}  // namespace nosignal::cli
