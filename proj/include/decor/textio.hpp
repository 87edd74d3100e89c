#pragma once

// Line and field scanning shared by the text artifact formats. Parse
// failures throw format_error carrying the byte offset of the offending
// line, mirroring the binary readers.

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "decor/common.hpp"

namespace decor {

// Non-empty lines with the byte offset each one starts at; handles a missing
// final newline and strips carriage returns.
inline std::vector<std::pair<std::size_t, std::string>> split_lines(const std::string& text) {
  std::vector<std::pair<std::size_t, std::string>> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.emplace_back(start, line);
    if (end == text.size()) break;
    start = end + 1;
  }
  return lines;
}

// One comma-separated field, trimmed; advances pos past the field and the
// separator. Returns false at end of line.
inline bool next_field(const std::string& line, std::size_t& pos, std::string& out) {
  if (pos >= line.size()) return false;
  std::size_t comma = line.find(',', pos);
  if (comma == std::string::npos) comma = line.size();
  std::size_t lo = pos, hi = comma;
  while (lo < hi && (line[lo] == ' ' || line[lo] == '\t')) ++lo;
  while (hi > lo && (line[hi - 1] == ' ' || line[hi - 1] == '\t')) --hi;
  out = line.substr(lo, hi - lo);
  pos = comma < line.size() ? comma + 1 : line.size() + 1;
  return true;
}

inline std::uint64_t parse_u64(const std::string& field, std::size_t at, const std::string& what) {
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw format_error("expected an unsigned integer " + what + ", got \"" + field + "\"", at);
  return value;
}

inline long parse_long(const std::string& field, std::size_t at, const std::string& what) {
  long value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw format_error("expected an integer " + what + ", got \"" + field + "\"", at);
  return value;
}

inline double parse_double(const std::string& field, std::size_t at, const std::string& what) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw format_error("expected a " + what + ", got \"" + field + "\"", at);
  return value;
}

// Shortest representation that round-trips a double bit-exactly.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace decor
