#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace refrain {

// Command-line entry point. `args[0]` is the program name. Returns 0 on
// success, 1 on a runtime failure and 2 on a usage error.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_main(int argc, const char* const* argv);

}  // namespace refrain
