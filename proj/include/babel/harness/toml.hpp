// Minimal TOML subset reader: [sections], key = value, scalars
// (string, integer, float, bool) and flat arrays, # comments.
#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "babel/common.hpp"

namespace babel::harness {

struct TomlValue {
  using Array = std::vector<TomlValue>;
  std::variant<std::string, std::int64_t, double, bool, Array> v;

  bool is_string() const { return std::holds_alternative<std::string>(v); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(v); }
  bool is_float() const { return std::holds_alternative<double>(v); }
  bool is_bool() const { return std::holds_alternative<bool>(v); }
  bool is_array() const { return std::holds_alternative<Array>(v); }

  const std::string& as_string() const {
    if (!is_string()) throw Error("toml: expected string");
    return std::get<std::string>(v);
  }
  std::int64_t as_int() const {
    if (is_int()) return std::get<std::int64_t>(v);
    throw Error("toml: expected integer");
  }
  double as_float() const {
    if (is_float()) return std::get<double>(v);
    if (is_int()) return (double)std::get<std::int64_t>(v);
    throw Error("toml: expected number");
  }
  bool as_bool() const {
    if (!is_bool()) throw Error("toml: expected bool");
    return std::get<bool>(v);
  }
  const Array& as_array() const {
    if (!is_array()) throw Error("toml: expected array");
    return std::get<Array>(v);
  }
};

class TomlTable {
 public:
  using Section = std::map<std::string, TomlValue>;

  bool has(const std::string& section, const std::string& key) const {
    auto it = sections_.find(section);
    return it != sections_.end() && it->second.count(key) > 0;
  }

  const TomlValue& get(const std::string& section,
                       const std::string& key) const {
    auto it = sections_.find(section);
    if (it == sections_.end() || !it->second.count(key))
      throw Error("toml: missing key [" + section + "] " + key);
    return it->second.at(key);
  }

  std::string get_string(const std::string& s, const std::string& k,
                         const std::string& dflt) const {
    return has(s, k) ? get(s, k).as_string() : dflt;
  }
  std::int64_t get_int(const std::string& s, const std::string& k,
                       std::int64_t dflt) const {
    return has(s, k) ? get(s, k).as_int() : dflt;
  }
  double get_float(const std::string& s, const std::string& k,
                   double dflt) const {
    return has(s, k) ? get(s, k).as_float() : dflt;
  }
  bool get_bool(const std::string& s, const std::string& k, bool dflt) const {
    return has(s, k) ? get(s, k).as_bool() : dflt;
  }

  void set(const std::string& section, const std::string& key, TomlValue v) {
    sections_[section][key] = std::move(v);
  }

  const std::map<std::string, Section>& sections() const { return sections_; }

  static TomlTable parse(const std::string& text);
  static TomlTable parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot read config: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
  }

  // Canonical text for config hashing.
  std::string canonical() const {
    std::ostringstream os;
    for (const auto& [sec, kv] : sections_) {
      os << "[" << sec << "]\n";
      for (const auto& [k, val] : kv) {
        os << k << " = ";
        dump_value(os, val);
        os << "\n";
      }
    }
    return os.str();
  }

 private:
  static void dump_value(std::ostream& os, const TomlValue& v) {
    if (v.is_string()) {
      os << '"' << v.as_string() << '"';
    } else if (v.is_int()) {
      os << v.as_int();
    } else if (v.is_float()) {
      std::ostringstream t;
      t.precision(17);
      t << std::get<double>(v.v);
      os << t.str();
    } else if (v.is_bool()) {
      os << (v.as_bool() ? "true" : "false");
    } else {
      os << "[";
      bool first = true;
      for (const auto& e : v.as_array()) {
        if (!first) os << ", ";
        first = false;
        dump_value(os, e);
      }
      os << "]";
    }
  }

  std::map<std::string, Section> sections_;
};

namespace toml_detail {

inline void skip_ws(const std::string& s, std::size_t& i) {
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
}

inline TomlValue parse_value(const std::string& s, std::size_t& i);

inline TomlValue parse_scalar(const std::string& s, std::size_t& i) {
  skip_ws(s, i);
  if (i >= s.size()) throw Error("toml: missing value");
  if (s[i] == '"') {
    ++i;
    std::string out;
    while (i < s.size() && s[i] != '"') {
      if (s[i] == '\\' && i + 1 < s.size()) {
        ++i;
        switch (s[i]) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: throw Error("toml: bad escape");
        }
      } else {
        out += s[i];
      }
      ++i;
    }
    if (i >= s.size()) throw Error("toml: unterminated string");
    ++i;
    return TomlValue{out};
  }
  std::size_t start = i;
  while (i < s.size() && s[i] != ',' && s[i] != ']' && s[i] != '#') ++i;
  std::string tok = s.substr(start, i - start);
  while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t'))
    tok.pop_back();
  if (tok == "true") return TomlValue{true};
  if (tok == "false") return TomlValue{false};
  if (tok.find_first_of(".eE") != std::string::npos &&
      tok.find_first_not_of("+-0123456789.eE_") == std::string::npos) {
    return TomlValue{std::stod(tok)};
  }
  if (tok.find_first_not_of("+-0123456789_") == std::string::npos &&
      !tok.empty()) {
    std::string digits;
    for (char c : tok)
      if (c != '_') digits += c;
    return TomlValue{(std::int64_t)std::stoll(digits)};
  }
  throw Error("toml: cannot parse value '" + tok + "'");
}

inline TomlValue parse_value(const std::string& s, std::size_t& i) {
  skip_ws(s, i);
  if (i < s.size() && s[i] == '[') {
    ++i;
    TomlValue::Array arr;
    skip_ws(s, i);
    if (i < s.size() && s[i] == ']') {
      ++i;
      return TomlValue{arr};
    }
    while (true) {
      arr.push_back(parse_value(s, i));
      skip_ws(s, i);
      if (i < s.size() && s[i] == ',') {
        ++i;
        continue;
      }
      if (i < s.size() && s[i] == ']') {
        ++i;
        break;
      }
      throw Error("toml: malformed array");
    }
    return TomlValue{arr};
  }
  return parse_scalar(s, i);
}

}  // namespace toml_detail

inline TomlTable TomlTable::parse(const std::string& text) {
  TomlTable t;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t i = 0;
    toml_detail::skip_ws(line, i);
    if (i >= line.size() || line[i] == '#') continue;
    if (line[i] == '[') {
      std::size_t close = line.find(']', i);
      if (close == std::string::npos)
        throw Error("toml line " + std::to_string(lineno) + ": bad section");
      section = line.substr(i + 1, close - i - 1);
      continue;
    }
    std::size_t eq = line.find('=', i);
    if (eq == std::string::npos)
      throw Error("toml line " + std::to_string(lineno) + ": expected key = value");
    std::string key = line.substr(i, eq - i);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t'))
      key.pop_back();
    if (key.empty())
      throw Error("toml line " + std::to_string(lineno) + ": empty key");
    std::size_t vi = eq + 1;
    try {
      t.set(section, key, toml_detail::parse_value(line, vi));
    } catch (const Error& e) {
      throw Error("toml line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return t;
}

}  // namespace babel::harness
