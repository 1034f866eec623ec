#pragma once

#include <cstdio>
#include <string>

namespace nlmc {

/// Round-trip text for a double: 17 significant digits. The program never
/// calls setlocale, so the decimal separator is always '.'.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace nlmc
