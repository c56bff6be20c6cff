#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <string>

namespace spatialref {

// Half-up rounding at `decimals` places (0.1245 -> 0.125 at 3).
inline double round_half_up(double x, int decimals) {
  double scale = std::pow(10.0, decimals);
  return std::floor(x * scale + 0.5) / scale;
}

inline std::string fmt_fixed(double x, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, round_half_up(x, decimals));
  return buf;
}

inline std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return char(std::tolower(c)); });
  return s;
}

// Lowercase with runs of whitespace collapsed to single spaces; the
// normalization used for target-text matching.
inline std::string normalize_text(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  bool in_ws = true;
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      if (!in_ws && !out.empty()) out.push_back(' ');
      in_ws = true;
    } else {
      out.push_back(char(std::tolower(c)));
      in_ws = false;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

}  // namespace spatialref
