#include <algorithm>

#include "decor/common.hpp"
#include "decor/kv.hpp"
#include "decor/textio.hpp"

namespace decor {

namespace {

std::string trim(const std::string& s) {
  std::size_t lo = 0, hi = s.size();
  while (lo < hi && (s[lo] == ' ' || s[lo] == '\t')) ++lo;
  while (hi > lo && (s[hi - 1] == ' ' || s[hi - 1] == '\t')) --hi;
  return s.substr(lo, hi - lo);
}

}  // namespace

KvPairs parse_kv(const std::string& text) {
  KvPairs pairs;
  std::string section;
  for (const auto& [at, raw] : split_lines(text)) {
    const std::string line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw format_error("unterminated section header", at);
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw format_error("empty section name", at);
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw format_error("expected `key = value`, got \"" + line + "\"", at);
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw format_error("empty key", at);
    const std::string full = section.empty() ? key : section + "." + key;
    if (find_kv(pairs, full)) throw format_error("duplicate key \"" + full + "\"", at);
    pairs.emplace_back(full, trim(line.substr(eq + 1)));
  }
  return pairs;
}

std::string format_kv(const KvPairs& pairs) {
  std::string out;
  for (const auto& [key, value] : pairs) out += key + " = " + value + "\n";
  return out;
}

const std::string* find_kv(const KvPairs& pairs, const std::string& key) {
  const auto it = std::find_if(pairs.begin(), pairs.end(),
                               [&](const auto& p) { return p.first == key; });
  return it == pairs.end() ? nullptr : &it->second;
}

}  // namespace decor
