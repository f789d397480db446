#pragma once

namespace afford {

// Entry point behind the `afford` binary. Returns 0 on success, 1 on usage
// errors, 2 on runtime failures.
int run_cli(int argc, const char* const* argv);

}  // namespace afford
