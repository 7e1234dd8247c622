#pragma once

// Reader for the subset of TOML used by run configurations: [table] headers,
// dotted and quoted keys, strings, booleans, integers, floats and (possibly
// multi-line) arrays of those. Inline tables and dates are rejected.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "tmatch/errors.hpp"

namespace tmatch::toml {

struct Value;
using Array = std::vector<Value>;

struct Value {
  std::variant<bool, std::int64_t, double, std::string, Array> v;

  bool is_bool() const { return std::holds_alternative<bool>(v); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(v); }
  bool is_float() const { return std::holds_alternative<double>(v); }
  bool is_number() const { return is_int() || is_float(); }
  bool is_string() const { return std::holds_alternative<std::string>(v); }
  bool is_array() const { return std::holds_alternative<Array>(v); }

  std::string type_name() const {
    static const char* names[] = {"boolean", "integer", "float", "string", "array"};
    return names[v.index()];
  }
  bool operator==(const Value& o) const { return v == o.v; }
};

/// Flattened document: "table.key" -> value, in key order.
using Document = std::map<std::string, Value>;

namespace detail {

class Parser {
 public:
  Parser(std::string text, std::string origin) : s_(std::move(text)), origin_(std::move(origin)) {}

  Document parse() {
    Document doc;
    std::string prefix;
    while (skip_blank_lines(), pos_ < s_.size()) {
      if (s_[pos_] == '[') {
        ++pos_;
        if (peek() == '[') fail("arrays of tables are not supported");
        skip_ws();
        prefix = parse_key();
        skip_ws();
        expect(']');
        end_of_line();
        if (tables_.count(prefix)) fail("table [" + prefix + "] defined twice");
        tables_.insert({prefix, 0});
        continue;
      }
      std::string key = parse_key();
      skip_ws();
      expect('=');
      skip_ws();
      Value val = parse_value();
      end_of_line();
      const std::string full = prefix.empty() ? key : prefix + "." + key;
      if (!doc.emplace(full, std::move(val)).second) fail("duplicate key '" + full + "'");
    }
    return doc;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    std::size_t line = 1;
    for (std::size_t i = 0; i < pos_ && i < s_.size(); ++i) line += s_[i] == '\n';
    throw ConfigError(origin_ + ":" + std::to_string(line) + ": " + what);
  }

  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  void skip_comment() {
    if (peek() == '#')
      while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
  }

  void skip_blank_lines() {
    for (;;) {
      skip_ws();
      skip_comment();
      if (peek() == '\r') ++pos_;
      if (peek() == '\n') {
        ++pos_;
        continue;
      }
      return;
    }
  }

  // Whitespace, comments and newlines, as allowed inside arrays.
  void skip_array_space() {
    for (;;) {
      skip_ws();
      skip_comment();
      if (peek() == '\n' || peek() == '\r') {
        ++pos_;
        continue;
      }
      return;
    }
  }

  void end_of_line() {
    skip_ws();
    skip_comment();
    if (peek() == '\r') ++pos_;
    if (pos_ < s_.size() && s_[pos_] != '\n') fail("unexpected trailing characters");
  }

  static bool bare_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }

  std::string parse_key() {
    std::string key;
    for (;;) {
      skip_ws();
      if (peek() == '"') {
        key += parse_basic_string();
      } else {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && bare_char(s_[pos_])) ++pos_;
        if (pos_ == start) fail("expected a key");
        key.append(s_, start, pos_ - start);
      }
      skip_ws();
      if (peek() != '.') return key;
      ++pos_;
      key += '.';
    }
  }

  std::string parse_basic_string() {
    expect('"');
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char c = s_[pos_++];
      if (c == '\n') fail("newline in string");
      if (c != '\\') {
        out += c;
        continue;
      }
      if (pos_ >= s_.size()) fail("unterminated escape");
      c = s_[pos_++];
      switch (c) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        case 'b': out += '\b'; break;
        case 'f': out += '\f'; break;
        default: fail(std::string("unsupported escape \\") + c);
      }
    }
    expect('"');
    return out;
  }

  std::string parse_literal_string() {
    expect('\'');
    const std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != '\'') {
      if (s_[pos_] == '\n') fail("newline in string");
      ++pos_;
    }
    std::string out = s_.substr(start, pos_ - start);
    expect('\'');
    return out;
  }

  Value parse_value() {
    const char c = peek();
    if (c == '"') return {parse_basic_string()};
    if (c == '\'') return {parse_literal_string()};
    if (c == '[') return {parse_array()};
    if (c == '{') fail("inline tables are not supported");
    const std::size_t start = pos_;
    while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) && s_[pos_] != ',' &&
           s_[pos_] != ']' && s_[pos_] != '#')
      ++pos_;
    const std::string tok = s_.substr(start, pos_ - start);
    if (tok.empty()) fail("expected a value");
    if (tok == "true") return {true};
    if (tok == "false") return {false};
    return parse_number(tok);
  }

  Value parse_number(std::string tok) {
    std::string clean;
    for (std::size_t i = 0; i < tok.size(); ++i) {
      if (tok[i] == '_') {
        if (i == 0 || i + 1 == tok.size() || !std::isdigit(static_cast<unsigned char>(tok[i - 1])) ||
            !std::isdigit(static_cast<unsigned char>(tok[i + 1])))
          fail("misplaced '_' in number '" + tok + "'");
        continue;
      }
      clean += tok[i];
    }
    std::string body = clean;
    double sign = 1.0;
    if (!body.empty() && (body[0] == '+' || body[0] == '-')) {
      sign = body[0] == '-' ? -1.0 : 1.0;
      body.erase(0, 1);
    }
    if (body == "inf") return {sign * std::numeric_limits<double>::infinity()};
    if (body == "nan") return {std::numeric_limits<double>::quiet_NaN()};
    const bool is_float = body.find_first_of(".eE") != std::string::npos;
    if (!is_float) {
      if (body.size() > 1 && body[0] == '0') fail("leading zero in integer '" + tok + "'");
      std::int64_t v = 0;
      const char* b = clean.data() + (clean[0] == '+' ? 1 : 0);
      auto r = std::from_chars(b, clean.data() + clean.size(), v);
      if (r.ec != std::errc() || r.ptr != clean.data() + clean.size()) fail("invalid integer '" + tok + "'");
      return {v};
    }
    if (body.empty() || body[0] == '.' || body.back() == '.') fail("invalid float '" + tok + "'");
    double v = 0.0;
    const char* b = clean.data() + (clean[0] == '+' ? 1 : 0);
    auto r = std::from_chars(b, clean.data() + clean.size(), v);
    if (r.ec != std::errc() || r.ptr != clean.data() + clean.size()) fail("invalid float '" + tok + "'");
    return {v};
  }

  Array parse_array() {
    expect('[');
    Array out;
    for (;;) {
      skip_array_space();
      if (peek() == ']') {
        ++pos_;
        return out;
      }
      out.push_back(parse_value());
      skip_array_space();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      if (peek() == ']') {
        ++pos_;
        return out;
      }
      fail("expected ',' or ']' in array");
    }
  }

  std::string s_;
  std::string origin_;
  std::size_t pos_ = 0;
  std::map<std::string, int> tables_;
};

}  // namespace detail

inline Document parse(const std::string& text, const std::string& origin = "<string>") {
  return detail::Parser(text, origin).parse();
}

inline Document parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

/// Parses the right-hand side of a `key=value` override. Bare words that are
/// not TOML literals are taken as strings, so `--set encoder.mode=sweep` works.
inline Value parse_scalar(const std::string& text) {
  try {
    Document d = parse("v = " + text + "\n", "override");
    return d.at("v");
  } catch (const ConfigError&) {
    if (text.find_first_of("\"'[]\n") != std::string::npos) throw;
    return {text};
  }
}

}  // namespace tmatch::toml
