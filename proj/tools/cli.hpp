#pragma once

#include <ostream>

namespace bwdep {

inline constexpr const char* kToolVersion = "1.0.0";

// Exit codes: 0 success, 2 input error, 3 numerical error, 4 non-convergence.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bwdep
