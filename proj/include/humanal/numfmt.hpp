#pragma once

// Deterministic number formatting: shortest representation that parses
// back to the identical double, used everywhere a number becomes text.

#include <charconv>
#include <cstdio>
#include <string>

namespace humanal {

// Shortest round-trip decimal form ("0.5", "11.25", "1e-09").
inline std::string format_double(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

// Round-trip form padded to at least two decimal places ("0.50", "1.00");
// values that already print with two or more decimals are left untouched.
inline std::string format_confidence(double value) {
  std::string s = format_double(value);
  if (s.find('e') != std::string::npos || s.find('E') != std::string::npos) return s;
  const size_t dot = s.find('.');
  if (dot == std::string::npos) return s + ".00";
  if (s.size() - dot - 1 < 2) return s + "0";
  return s;
}

}  // namespace humanal
