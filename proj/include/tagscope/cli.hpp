#pragma once

// Command-line front end. Every pipeline stage is a subcommand; outputs are
// files under --out plus a one-line summary on standard output.

#include <ostream>
#include <string>
#include <vector>

namespace tagscope {

// args excludes the program name. Returns the process exit status:
// 0 success, 2 configuration error (bad flags, missing files), 1 runtime
// failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace tagscope
