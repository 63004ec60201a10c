#pragma once
// Command-line front end: oracle, estimate, simulate, placebo.
//
// Exit codes: 0 success, 2 usage/validation error, 1 runtime failure.

namespace dscw {

int parse_and_dispatch(int argc, char** argv);

} // namespace dscw
