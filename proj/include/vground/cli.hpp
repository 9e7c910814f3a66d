#pragma once

#include <string>
#include <vector>

namespace vground {

// Full command-line entry point. Exit codes: 0 success, 1 validation,
// 2 I/O, 3 numeric abort.
int cli_main(const std::vector<std::string>& args);

}  // namespace vground
