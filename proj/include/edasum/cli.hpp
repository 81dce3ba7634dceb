#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace edasum {

// Runs one subcommand. `args` excludes the program name. Returns 0 on
// success, 1 on runtime errors and 2 on usage errors.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace edasum
