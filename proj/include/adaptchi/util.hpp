#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace adaptchi::util {

// Decimal text with 17 significant digits (round-trips a double exactly).
inline std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// FNV-1a, stable across platforms; used for config hashes.
inline uint64_t fnv1a(std::string_view s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace adaptchi::util
