#pragma once

// Flat text key-value files: `key = value` lines, `#` comments, optional
// `[section]` headers that prefix the keys that follow with "section.".
// Order-preserving so that echoed configs stay byte-comparable.

#include <string>
#include <utility>
#include <vector>

namespace decor {

using KvPairs = std::vector<std::pair<std::string, std::string>>;

// Parses the text form. Duplicate keys, empty keys, empty section names, and
// lines that are neither pairs, comments, nor sections throw format_error
// with the line's byte offset.
KvPairs parse_kv(const std::string& text);

// Plain `key = value` lines in order; sections are not reconstructed (dotted
// keys are written as-is).
std::string format_kv(const KvPairs& pairs);

// Pointer to the value for key, or nullptr when absent.
const std::string* find_kv(const KvPairs& pairs, const std::string& key);

}  // namespace decor
