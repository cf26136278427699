#pragma once

#include <string>
#include <vector>

namespace labelassoc::cli {

/// Runs one command line (without the program name) and returns the process
/// exit code: 0 ok, 2 input error, 3 config error, 4 invariant violation.
int run(const std::vector<std::string>& args);

}  // namespace labelassoc::cli
