#pragma once

#include <charconv>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "veridict/types.hpp"

namespace veridict {

// Shortest representation that round-trips a double exactly.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Prefer a shorter form when it round-trips to the same value.
  for (int prec = 1; prec < 17; ++prec) {
    char shorter[40];
    std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
    double back = 0.0;
    std::from_chars(shorter, shorter + std::char_traits<char>::length(shorter), back);
    if (back == v) return shorter;
  }
  return buf;
}

// Locale-independent strict parse; accepts nan/inf spellings (the caller
// decides whether non-finite values are admissible).
inline bool try_parse_double(std::string_view s, double& out) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline double parse_double_or_throw(std::string_view s, const std::string& context) {
  double v = 0.0;
  if (!try_parse_double(s, v))
    throw ValidationError("cannot parse number '" + std::string(s) + "' in " + context);
  return v;
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
  // Plain comma split; the file formats here never quote fields.
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      std::string_view f = line.substr(start, i - start);
      while (!f.empty() && (f.back() == '\r' || f.back() == '\n')) f.remove_suffix(1);
      out.emplace_back(f);
      start = i + 1;
    }
  }
  return out;
}

}  // namespace veridict
