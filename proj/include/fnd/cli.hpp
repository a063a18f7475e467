#pragma once

#include <string>
#include <vector>

namespace fnd {

/// Entry point for the `fnd` tool. Returns the process exit code:
/// 0 success, 2 usage/validation, 3 I/O, 4 network, 5 numerical failure.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);

}  // namespace fnd
