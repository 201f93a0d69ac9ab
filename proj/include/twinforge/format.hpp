#pragma once

#include <cstdio>
#include <string>

namespace twinforge {

/// Fixed-precision decimal used for every CSV and Markdown number.
inline std::string num(double x, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, x);
  return buf;
}

}  // namespace twinforge
