#pragma once

#include <string>
#include <vector>

namespace kmt::cli {

// Exit codes: 0 every assertion passed, 1 verification failure or output error, 2 usage error.
int run_command(int argc, const char* const* argv);
// args excludes the program name.
int run_command(const std::vector<std::string>& args);

}  // namespace kmt::cli
