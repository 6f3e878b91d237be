#pragma once

#include <ostream>

namespace chromaeeg {

/// Entry point of the command-line tool. Returns 0 on success, 1 on invalid
/// arguments and 2 when a command fails at run time (a failure.json is
/// written next to the command's output).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace chromaeeg
