#pragma once

namespace moco {

// Entry point for the `moco` tool. Returns the process exit code:
// 0 success, 2 configuration error, 3 data error, 4 numeric failure.
int run_cli(int argc, const char* const* argv);

}  // namespace moco
