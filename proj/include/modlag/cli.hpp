#pragma once

#include <iosfwd>

namespace modlag {

// Exit codes: 0 success, 1 check or derivation failure, 2 usage or parse error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace modlag
