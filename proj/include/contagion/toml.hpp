#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

namespace contagion {

// Flat TOML subset: [section] headers, key = value pairs with quoted strings,
// integers, floats, and booleans, and # comments. Keys are exposed as
// "section.key".

class TomlTable {
 public:
  static TomlTable parse(std::istream& in) {
    TomlTable table;
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::string s = strip(line);
      if (s.empty() || s[0] == '#') continue;
      if (s.front() == '[') {
        if (s.back() != ']') throw std::runtime_error(err(line_no, "unterminated section"));
        section = strip(s.substr(1, s.size() - 2));
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw std::runtime_error(err(line_no, "expected key = value"));
      const std::string key = strip(s.substr(0, eq));
      std::string value = strip(s.substr(eq + 1));
      if (key.empty()) throw std::runtime_error(err(line_no, "empty key"));
      if (value.empty()) throw std::runtime_error(err(line_no, "empty value"));
      if (value.front() == '"') {
        const auto close = value.find('"', 1);
        if (close == std::string::npos) throw std::runtime_error(err(line_no, "unterminated string"));
        value = value.substr(1, close - 1);
      } else {
        const auto hash = value.find('#');
        if (hash != std::string::npos) value = strip(value.substr(0, hash));
      }
      table.values_[section.empty() ? key : section + "." + key] = value;
    }
    return table;
  }

  static TomlTable parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config '" + path + "'");
    return parse(in);
  }

  bool contains(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& def) const {
    const auto it = values_.find(key);
    return it == values_.end() ? def : it->second;
  }

  std::int64_t get_int(const std::string& key, std::int64_t def) const {
    const auto it = values_.find(key);
    return it == values_.end() ? def : std::stoll(it->second);
  }

  std::uint64_t get_uint(const std::string& key, std::uint64_t def) const {
    const auto it = values_.find(key);
    return it == values_.end() ? def : std::stoull(it->second);
  }

  double get_double(const std::string& key, double def) const {
    const auto it = values_.find(key);
    return it == values_.end() ? def : std::stod(it->second);
  }

  bool get_bool(const std::string& key, bool def) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return def;
    if (it->second == "true") return true;
    if (it->second == "false") return false;
    throw std::runtime_error("key '" + key + "': expected true or false");
  }

 private:
  static std::string strip(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
  }

  static std::string err(std::size_t line, const std::string& what) {
    std::ostringstream os;
    os << "config line " << line << ": " << what;
    return os.str();
  }

  std::map<std::string, std::string> values_;
};

}  // namespace contagion
