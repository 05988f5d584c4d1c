#pragma once

#include <cstdio>
#include <string>

namespace mvgrf {

/// 17 significant digits: enough for any double to round-trip.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace mvgrf
