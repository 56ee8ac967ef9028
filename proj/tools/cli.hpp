#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace specnip {

// Exit codes: 0 pass, 1 violation, 2 inconclusive within bounds, 3 usage or parse error.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace specnip
