#pragma once

#include <iosfwd>

namespace inline_snspd::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_runtime_error = 1;
inline constexpr int exit_config_error = 2;

// Entry point of the command-line tool; never throws. Results go to out (or
// --out), diagnostics to err.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace inline_snspd::cli
