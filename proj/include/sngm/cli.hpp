#pragma once

#include <iostream>
#include <string>
#include <vector>

namespace sngm {

// Entry point behind the command-line tool. Returns the process exit code:
// 0 on success, 1 on validation/usage errors, 2 when a run diverges or a
// guaranteed runtime bound is violated. Streams are injectable for tests.
int cli_main(const std::vector<std::string>& args, std::ostream& out = std::cout,
             std::ostream& err = std::cerr);

}  // namespace sngm
