#pragma once

#include <ostream>

namespace cam {

// Entry point of the `cam` tool. Exit codes: 0 success, 1 runtime failure,
// 2 usage or configuration error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cam
