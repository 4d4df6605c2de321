#pragma once

#include <iosfwd>

namespace lmkit {

// Exit codes of the command-line front end.
inline constexpr int kExitSuccess = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitNotConverged = 2;

// Runs one lmkit command. Reports go to `out` unless --out names a file;
// diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lmkit
