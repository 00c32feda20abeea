#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stelle {

/// Runs one subcommand; argv[0] is the program name. Results go to `out`, logs and diagnostics to `err`.
int run_command(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace stelle
