#ifndef QINTERP_CLI_HPP
#define QINTERP_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace qinterp {

// Full command-line entry point (everything but main's argv unpacking), so
// tests can drive the binary in-process. `args` excludes the program name.
// Returns the process exit code: 0 success, 1 runtime failure, 2 usage.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace qinterp

#endif  // QINTERP_CLI_HPP
