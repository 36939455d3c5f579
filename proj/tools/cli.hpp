#pragma once

#include <iostream>

namespace rainsim {

// Entry point of the `rainsim` command. Returns the process exit code:
// 0 success, 1 usage or validation error, 2 I/O error.
int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
            std::ostream& err = std::cerr);

}  // namespace rainsim
