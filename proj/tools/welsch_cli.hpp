#pragma once

namespace welsch {

/// Entry point behind the `welsch` binary; separated so tests can drive the
/// CLI in-process. Returns 0 on success, 1 on runtime failure, 2 on
/// configuration errors (including unknown flags).
int cli_main(int argc, const char* const* argv);

}  // namespace welsch
