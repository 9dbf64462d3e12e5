#pragma once

// Minimal "key = value" text with optional [section] headers and '#'
// comments. Used for problem files and run configuration files.

#include <string>
#include <string_view>
#include <vector>

#include "homoclinic/error.hpp"

namespace homoclinic {

struct KeyValue {
  std::string section;
  std::string key;
  std::string value;
  int line;
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace detail

inline std::vector<KeyValue> parse_key_values(std::string_view text, std::string_view origin = "config") {
  std::vector<KeyValue> out;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    std::string line = detail::trim(raw);
    if (line.empty() || line[0] == ';') continue;

    auto where = [&] { return std::string(origin) + ":" + std::to_string(line_no); };
    if (line.front() == '[') {
      if (line.back() != ']') throw UsageError(where() + ": unterminated section header");
      section = detail::trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty()) throw UsageError(where() + ": empty section name");
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(where() + ": expected 'key = value'");
    std::string key = detail::trim(std::string_view(line).substr(0, eq));
    std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw UsageError(where() + ": missing key");
    out.push_back({section, key, value, line_no});
  }
  return out;
}

}  // namespace homoclinic
