#pragma once

#include <iosfwd>

namespace gla::cli {

// Exit codes: 0 all good, 1 a check failed, 2 bad input, config or file.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitInputError = 2;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gla::cli
