#pragma once

// Minimal "key = value" reader with [sections] that remembers where every
// entry came from, so validation errors can point at a line.

#include <cctype>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>

#include "kerrbeam/error.hpp"

namespace kerrbeam::app {

struct IniEntry {
  std::string value;
  std::string origin;  // "file:line" or "--set"
};

/// Entries keyed by "section.key".
using IniTable = std::map<std::string, IniEntry>;

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::string_view strip_comment(std::string_view line) {
  // '#' or ';' start a comment anywhere outside a quoted value
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (!quoted && (line[i] == '#' || line[i] == ';')) return line.substr(0, i);
  }
  return line;
}

inline std::string unquote(std::string_view v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
  return std::string(v);
}

inline IniTable parse_ini(std::istream& in, const std::string& source) {
  IniTable table;
  std::string section;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    std::string_view line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw ConfigError(where + ": missing key before '='");
    if (section.empty()) throw ConfigError(where + ": key '" + key + "' appears before any [section]");
    const std::string full = section + "." + key;
    if (auto it = table.find(full); it != table.end())
      throw ConfigError(where + ": duplicate key '" + full + "' (first set at " + it->second.origin + ")");
    table.emplace(full, IniEntry{unquote(trim(line.substr(eq + 1))), where});
  }
  return table;
}

inline IniTable parse_ini_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_ini(in, path);
}

inline IniTable parse_ini_string(const std::string& text, const std::string& source = "<string>") {
  std::istringstream in(text);
  return parse_ini(in, source);
}

/// Applies "section.key=value" on top of a table.
inline void apply_override(IniTable& table, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw ConfigError("--set " + std::string(assignment) + ": expected section.key=value");
  const std::string key(trim(assignment.substr(0, eq)));
  if (key.find('.') == std::string::npos)
    throw ConfigError("--set " + std::string(assignment) + ": key must be written as section.key");
  table[key] = IniEntry{unquote(trim(assignment.substr(eq + 1))), "--set"};
}

}  // namespace kerrbeam::app
