#pragma once

#include <iosfwd>

namespace pale::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitTransport = 3;
inline constexpr int kExitInternal = 1;

/// Entry point shared by the `pale` binary and the in-process tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pale::cli
