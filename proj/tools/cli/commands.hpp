#pragma once

#include <iosfwd>

namespace copypaste::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitFatal = 2;

/// Entry point of the copypaste executable. Normal output and diagnostics go
/// to the given streams.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace copypaste::cli
