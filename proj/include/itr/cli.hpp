#pragma once

#include <iosfwd>

namespace itr {

// Entry point of the `itr` tool. Returns the process exit code:
// 0 success, 1 runtime or numeric failure, 2 usage, config or input error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace itr
