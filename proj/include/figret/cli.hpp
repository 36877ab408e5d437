#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace figret {

/// Entry point of the `figret` tool. `args` excludes the program name.
/// Returns 0 on success, 1 on usage errors and 2 on runtime errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace figret
