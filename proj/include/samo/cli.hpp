#pragma once

#include <string>
#include <vector>

namespace samo {

/// Dispatches one subcommand (args exclude the program name) and returns the
/// process exit code: 0 success, 1 usage, 2 data/config error, 3 numeric
/// failure.
int run_cli(const std::vector<std::string>& args);

}  // namespace samo
