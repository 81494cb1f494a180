#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace swei::cli {

/// Runs one command line (args[0] is the program name) and returns the exit
/// code: 0 success, 2 validation error, 3 data error, 4 numeric failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace swei::cli
