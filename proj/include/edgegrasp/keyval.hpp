#pragma once

#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "edgegrasp/geometry.hpp"

namespace edgegrasp {

// Plain-text sectioned key-value format:
//   key = value            (top-level)
//   [section]
//   key = value
// Sections may repeat; '#' starts a comment. Values keep their raw text and
// are converted on access.
struct KeyValSection {
  std::string name;
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const { return values.count(key) != 0; }

  double get_double(const std::string& key, double fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    try {
      size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      return v;
    } catch (const std::exception&) {
      throw config_error("bad numeric value for '" + key + "': " + it->second);
    }
  }

  int get_int(const std::string& key, int fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    try {
      return std::stoi(it->second);
    } catch (const std::exception&) {
      throw config_error("bad integer value for '" + key + "': " + it->second);
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    const std::string& s = it->second;
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw config_error("bad boolean value for '" + key + "': " + s);
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
  }

  std::vector<double> get_vector(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) return {};
    std::istringstream ss(it->second);
    std::vector<double> out;
    double v;
    while (ss >> v) out.push_back(v);
    return out;
  }
};

struct KeyValFile {
  std::vector<KeyValSection> sections;  // in file order; index 0 is top-level

  const KeyValSection* find(const std::string& name) const {
    for (const auto& s : sections)
      if (s.name == name) return &s;
    return nullptr;
  }

  // empty stand-in for missing sections so defaults apply
  const KeyValSection& section(const std::string& name) const {
    static const KeyValSection empty;
    const KeyValSection* s = find(name);
    return s ? *s : empty;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace detail

inline KeyValFile parse_keyval(std::istream& in) {
  KeyValFile file;
  file.sections.push_back({"", {}});
  size_t cur = 0;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw config_error("line " + std::to_string(line_no) + ": unterminated section header");
      file.sections.push_back({detail::trim(line.substr(1, line.size() - 2)), {}});
      cur = file.sections.size() - 1;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw config_error("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw config_error("line " + std::to_string(line_no) + ": empty key");
    file.sections[cur].values[key] = val;
  }
  return file;
}

inline KeyValFile parse_keyval_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw input_error("cannot open file: " + path);
  return parse_keyval(f);
}

}  // namespace edgegrasp
