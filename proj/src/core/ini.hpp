#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "core/error.hpp"

namespace schedsyn::core {

// Minimal sectioned key=value reader. Sections keep file order; keys within a
// section are unique. Lines starting with '#' are comments.
struct IniSection {
  std::string name;
  std::map<std::string, std::string> values;
  bool has(const std::string& key) const { return values.count(key) > 0; }
  const std::string& get(const std::string& key) const {
    const auto it = values.find(key);
    if (it == values.end()) {
      throw DataError("config section [" + name + "] is missing key '" + key + "'");
    }
    return it->second;
  }
};

inline std::string ini_trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  size_t e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

inline std::vector<IniSection> parse_ini(std::istream& in, const std::string& origin) {
  std::vector<IniSection> sections;
  sections.push_back({"", {}});
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = ini_trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      sections.push_back({ini_trim(t.substr(1, t.size() - 2)), {}});
      continue;
    }
    const size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw DataError(origin + ":" + std::to_string(lineno) + ": expected key=value");
    }
    sections.back().values[ini_trim(t.substr(0, eq))] = ini_trim(t.substr(eq + 1));
  }
  return sections;
}

inline std::vector<IniSection> parse_ini_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path + "'");
  return parse_ini(in, path);
}

}  // namespace schedsyn::core
