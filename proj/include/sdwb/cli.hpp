#pragma once

#include <string>
#include <vector>

namespace sdwb {

// Parses and runs one CLI invocation. Returns the process exit status:
// 0 on success, nonzero with a single-line diagnostic on stderr otherwise.
int run_cli(int argc, const char* const* argv);

// Convenience wrapper for tests; args exclude the program name.
int run_cli(const std::vector<std::string>& args);

}  // namespace sdwb
