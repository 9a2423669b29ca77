#pragma once

namespace bidrank {

// Full command-line front end. Returns the process exit code:
//   0  success, reports written
//   1  validation error (single-line "error: validation: ..." on stderr)
//   2  internal guard tripped (single-line "error: guard:<name>: ..." on stderr)
int parse_and_dispatch(int argc, const char* const* argv);

}  // namespace bidrank
