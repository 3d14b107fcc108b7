#pragma once

#include <cstdio>
#include <string>

namespace bootbench {

inline std::string format_double(double v, const char* fmt = "%.9g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

}  // namespace bootbench
