#pragma once

#include <ostream>

namespace mvgrf::cli {

inline constexpr const char* kCodeVersion = "0.1.0";

/// Exit codes: 0 success, 1 I/O or unexpected failure, 2 usage or
/// configuration error, 3 numerical failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace mvgrf::cli
