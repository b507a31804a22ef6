#pragma once

#include <iosfwd>

namespace planerect {

// Environment variable that sets the OpenMP thread count.
inline constexpr const char *kThreadsEnv = "PLANERECT_THREADS";

// Entry point of the planerect command-line tool. Returns the process exit
// code; errors are reported on err as "error: <Category>: message".
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace planerect
