#pragma once

// Command-line front end. Exit codes: 0 success, 1 invalid input or
// arguments, 2 numerical failure, 3 file errors, 4 a check suite ran and
// something failed.

#include <ostream>

namespace thinobs {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitNumerical = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitChecksFailed = 4;

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace thinobs
