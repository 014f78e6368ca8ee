#pragma once

#include <iosfwd>

namespace pathwise::cli {

// Exit codes.
inline constexpr int kPass = 0;
inline constexpr int kUsage = 1;   // bad flags, unreadable input, library error
inline constexpr int kFailed = 2;  // a verification check returned false

/// Runs the `pathwise` command line. Reports go to `out`; on exit code 1 a
/// JSON error object is written to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pathwise::cli
