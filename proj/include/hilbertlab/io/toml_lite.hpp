#pragma once

// A small TOML subset: [table] and [a.b] headers, key = value with strings, numbers,
// booleans and (possibly multi-line) flat arrays of numbers or strings, # comments.

#include <cctype>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "hilbertlab/errors.hpp"

namespace hilbertlab::toml {

using Value = std::variant<double, bool, std::string, std::vector<double>, std::vector<std::string>>;
using Table = std::map<std::string, Value>;  // keys are dotted paths, "table.key"

namespace detail {

inline std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] inline void bad(int line, const std::string& msg) {
  fail(ErrorKind::InvalidInput, "config line " + std::to_string(line) + ": " + msg);
}

inline std::string parse_string(const std::string& s, int line) {
  if (s.size() < 2 || s.front() != '"' || s.back() != '"') bad(line, "expected a quoted string");
  std::string out;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i] == '\\' && i + 2 < s.size()) {
      const char c = s[++i];
      out += c == 'n' ? '\n' : c == 't' ? '\t' : c;
    } else {
      out += s[i];
    }
  }
  return out;
}

inline double parse_number(const std::string& s, int line) {
  std::string t;
  for (char c : s)
    if (c != '_') t += c;
  if (t == "inf" || t == "+inf" || t == "-inf" || t == "nan") bad(line, "non-finite number");
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &pos);
  } catch (const std::exception&) {
    bad(line, "bad value '" + s + "'");
  }
  if (pos != t.size()) bad(line, "bad value '" + s + "'");
  return v;
}

inline std::vector<std::string> split_items(const std::string& body) {
  std::vector<std::string> items;
  std::string cur;
  bool in_str = false;
  for (char c : body) {
    if (c == '"') in_str = !in_str;
    if (c == ',' && !in_str) {
      items.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) items.push_back(trim(cur));
  return items;
}

inline Value parse_value(const std::string& raw, int line) {
  const std::string s = trim(raw);
  if (s.empty()) bad(line, "missing value");
  if (s.front() == '"') return parse_string(s, line);
  if (s == "true") return true;
  if (s == "false") return false;
  if (s.front() == '[') {
    if (s.back() != ']') bad(line, "unterminated array");
    const auto items = split_items(s.substr(1, s.size() - 2));
    if (items.empty()) return std::vector<double>{};
    if (items.front().front() == '"') {
      std::vector<std::string> out;
      for (const auto& it : items) out.push_back(parse_string(it, line));
      return out;
    }
    std::vector<double> out;
    for (const auto& it : items) out.push_back(parse_number(it, line));
    return out;
  }
  return parse_number(s, line);
}

}  // namespace detail

inline Table parse(const std::string& text) {
  Table out;
  std::istringstream in(text);
  std::string raw, table, pending_key, pending;
  int lineno = 0, pending_line = 0, depth = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = detail::trim(detail::strip_comment(raw));
    if (!pending_key.empty()) {
      pending += ' ' + line;
      for (char c : line) depth += (c == '[') - (c == ']');
      if (depth == 0) {
        out[pending_key] = detail::parse_value(pending, pending_line);
        pending_key.clear();
      }
      continue;
    }
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) detail::bad(lineno, "bad table header");
      table = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) detail::bad(lineno, "expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    if (key.empty()) detail::bad(lineno, "empty key");
    const std::string full = table.empty() ? key : table + "." + key;
    if (out.count(full)) detail::bad(lineno, "duplicate key '" + full + "'");
    const std::string val = detail::trim(line.substr(eq + 1));
    depth = 0;
    for (char c : val) depth += (c == '[') - (c == ']');
    if (depth > 0) {
      pending_key = full;
      pending = val;
      pending_line = lineno;
      continue;
    }
    out[full] = detail::parse_value(val, lineno);
  }
  if (!pending_key.empty()) detail::bad(pending_line, "unterminated array");
  return out;
}

template <typename T>
const T* get(const Table& t, const std::string& key) {
  const auto it = t.find(key);
  if (it == t.end()) return nullptr;
  const T* v = std::get_if<T>(&it->second);
  if (!v) fail(ErrorKind::InvalidInput, "config key '" + key + "' has the wrong type");
  return v;
}

}  // namespace hilbertlab::toml
