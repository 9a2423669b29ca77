#include "bidrank/config_tree.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace bidrank {

namespace {

struct Cursor {
  const std::string& text;
  std::size_t pos = 0;
  int line = 1;
  const std::string& origin;

  [[noreturn]] void fail(const std::string& message) const {
    throw ValidationError("config: " + origin + ":" + std::to_string(line) + ": " + message);
  }

  bool done() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }
  char take() {
    const char c = text[pos++];
    if (c == '\n') ++line;
    return c;
  }

  void skip_spaces() {
    while (!done() && (peek() == ' ' || peek() == '\t')) ++pos;
  }

  void skip_space_and_comments_inline() {
    skip_spaces();
    if (!done() && peek() == '#') {
      while (!done() && peek() != '\n') ++pos;
    }
  }
};

bool is_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}

std::string parse_key(Cursor& cur) {
  std::string key;
  while (!cur.done() && is_key_char(cur.peek())) key.push_back(cur.take());
  if (key.empty()) cur.fail("expected a key");
  return key;
}

ConfigTree::Value parse_value(Cursor& cur);

ConfigTree::Value parse_array(Cursor& cur) {
  ConfigTree::Array arr;
  cur.take();  // '['
  while (true) {
    cur.skip_spaces();
    while (!cur.done() && (cur.peek() == '\n' || cur.peek() == '\r' || cur.peek() == '#')) {
      if (cur.peek() == '#') {
        while (!cur.done() && cur.peek() != '\n') ++cur.pos;
      } else {
        cur.take();
      }
      cur.skip_spaces();
    }
    if (cur.done()) cur.fail("unterminated array");
    if (cur.peek() == ']') {
      cur.take();
      break;
    }
    arr.push_back(parse_value(cur));
    cur.skip_spaces();
    if (!cur.done() && cur.peek() == ',') cur.take();
  }
  return {std::move(arr)};
}

ConfigTree::Value parse_value(Cursor& cur) {
  cur.skip_spaces();
  if (cur.done()) cur.fail("expected a value");
  const char c = cur.peek();
  if (c == '[') return parse_array(cur);
  if (c == '"') {
    cur.take();
    std::string s;
    while (!cur.done() && cur.peek() != '"') {
      char ch = cur.take();
      if (ch == '\\' && !cur.done()) {
        const char esc = cur.take();
        switch (esc) {
          case 'n': ch = '\n'; break;
          case 't': ch = '\t'; break;
          case '"': ch = '"'; break;
          case '\\': ch = '\\'; break;
          default: cur.fail("unsupported escape sequence");
        }
      }
      s.push_back(ch);
    }
    if (cur.done()) cur.fail("unterminated string");
    cur.take();
    return {std::move(s)};
  }
  // bare token: bool, integer, or float
  std::string token;
  while (!cur.done() && cur.peek() != ',' && cur.peek() != ']' && cur.peek() != '\n' &&
         cur.peek() != '\r' && cur.peek() != ' ' && cur.peek() != '\t' && cur.peek() != '#')
    token.push_back(cur.take());
  if (token == "true") return {true};
  if (token == "false") return {false};
  if (token.empty()) cur.fail("expected a value");
  const bool looks_float = token.find_first_of(".eE") != std::string::npos &&
                           token.find("0x") != 0;
  if (!looks_float) {
    long long iv = 0;
    auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), iv);
    if (ec == std::errc() && p == token.data() + token.size()) return {iv};
  }
  double dv = 0.0;
  auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), dv);
  if (ec == std::errc() && p == token.data() + token.size()) return {dv};
  cur.fail("cannot parse value '" + token + "'");
}

}  // namespace

ConfigTree ConfigTree::parse_string(const std::string& text, const std::string& origin) {
  ConfigTree tree;
  tree.origin_ = origin;
  Cursor cur{text, 0, 1, tree.origin_};
  std::string prefix;
  while (!cur.done()) {
    cur.skip_space_and_comments_inline();
    if (cur.done()) break;
    const char c = cur.peek();
    if (c == '\n' || c == '\r') {
      cur.take();
      continue;
    }
    if (c == '[') {
      cur.take();
      cur.skip_spaces();
      prefix = parse_key(cur) + ".";
      cur.skip_spaces();
      if (cur.done() || cur.peek() != ']') cur.fail("expected ']' after section name");
      cur.take();
      cur.skip_space_and_comments_inline();
      continue;
    }
    const std::string key = parse_key(cur);
    cur.skip_spaces();
    if (cur.done() || cur.peek() != '=') cur.fail("expected '=' after key '" + key + "'");
    cur.take();
    Value value = parse_value(cur);
    cur.skip_space_and_comments_inline();
    if (!cur.done() && cur.peek() != '\n' && cur.peek() != '\r')
      cur.fail("trailing characters after value for '" + key + "'");
    const std::string full = prefix + key;
    if (tree.values_.count(full)) cur.fail("duplicate key '" + full + "'");
    tree.values_.emplace(full, std::move(value));
  }
  return tree;
}

ConfigTree ConfigTree::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str(), path);
}

bool ConfigTree::has(const std::string& key) const { return values_.count(key) != 0; }

const ConfigTree::Value& ConfigTree::find(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end())
    throw ValidationError("config: " + origin_ + ": missing required key '" + key + "'");
  consumed_.insert(key);
  return it->second;
}

long long ConfigTree::require_int(const std::string& key) const {
  const Value& v = find(key);
  if (const auto* i = std::get_if<long long>(&v.data)) return *i;
  throw ValidationError("config: " + origin_ + ": key '" + key + "' must be an integer");
}

double ConfigTree::require_double(const std::string& key) const {
  const Value& v = find(key);
  if (const auto* d = std::get_if<double>(&v.data)) return *d;
  if (const auto* i = std::get_if<long long>(&v.data)) return static_cast<double>(*i);
  throw ValidationError("config: " + origin_ + ": key '" + key + "' must be a number");
}

bool ConfigTree::require_bool(const std::string& key) const {
  const Value& v = find(key);
  if (const auto* b = std::get_if<bool>(&v.data)) return *b;
  throw ValidationError("config: " + origin_ + ": key '" + key + "' must be true/false");
}

std::string ConfigTree::require_string(const std::string& key) const {
  const Value& v = find(key);
  if (const auto* s = std::get_if<std::string>(&v.data)) return *s;
  throw ValidationError("config: " + origin_ + ": key '" + key + "' must be a string");
}

namespace {

double value_as_double(const ConfigTree::Value& v, const std::string& context) {
  if (const auto* d = std::get_if<double>(&v.data)) return *d;
  if (const auto* i = std::get_if<long long>(&v.data)) return static_cast<double>(*i);
  throw ValidationError(context + " must hold numbers");
}

long long value_as_int(const ConfigTree::Value& v, const std::string& context) {
  if (const auto* i = std::get_if<long long>(&v.data)) return *i;
  throw ValidationError(context + " must hold integers");
}

}  // namespace

std::vector<double> ConfigTree::require_double_array(const std::string& key) const {
  const Value& v = find(key);
  const auto* arr = std::get_if<Array>(&v.data);
  if (!arr) throw ValidationError("config: " + origin_ + ": key '" + key + "' must be an array");
  std::vector<double> out;
  for (const Value& e : *arr) out.push_back(value_as_double(e, "config: array '" + key + "'"));
  return out;
}

std::vector<long long> ConfigTree::require_int_array(const std::string& key) const {
  const Value& v = find(key);
  const auto* arr = std::get_if<Array>(&v.data);
  if (!arr) throw ValidationError("config: " + origin_ + ": key '" + key + "' must be an array");
  std::vector<long long> out;
  for (const Value& e : *arr) out.push_back(value_as_int(e, "config: array '" + key + "'"));
  return out;
}

std::vector<std::vector<long long>> ConfigTree::require_int_matrix(const std::string& key) const {
  const Value& v = find(key);
  const auto* arr = std::get_if<Array>(&v.data);
  if (!arr) throw ValidationError("config: " + origin_ + ": key '" + key + "' must be an array of arrays");
  std::vector<std::vector<long long>> out;
  for (const Value& row : *arr) {
    const auto* inner = std::get_if<Array>(&row.data);
    if (!inner)
      throw ValidationError("config: " + origin_ + ": key '" + key + "' must be an array of arrays");
    std::vector<long long> r;
    for (const Value& e : *inner) r.push_back(value_as_int(e, "config: matrix '" + key + "'"));
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<std::string> ConfigTree::require_string_array(const std::string& key) const {
  const Value& v = find(key);
  const auto* arr = std::get_if<Array>(&v.data);
  if (!arr) throw ValidationError("config: " + origin_ + ": key '" + key + "' must be an array");
  std::vector<std::string> out;
  for (const Value& e : *arr) {
    const auto* s = std::get_if<std::string>(&e.data);
    if (!s) throw ValidationError("config: array '" + key + "' must hold strings");
    out.push_back(*s);
  }
  return out;
}

long long ConfigTree::get_int(const std::string& key, long long fallback) const {
  return has(key) ? require_int(key) : fallback;
}
double ConfigTree::get_double(const std::string& key, double fallback) const {
  return has(key) ? require_double(key) : fallback;
}
bool ConfigTree::get_bool(const std::string& key, bool fallback) const {
  return has(key) ? require_bool(key) : fallback;
}
std::string ConfigTree::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? require_string(key) : fallback;
}

void ConfigTree::check_all_consumed() const {
  std::vector<std::string> unknown;
  for (const auto& [key, value] : values_)
    if (!consumed_.count(key)) unknown.push_back(key);
  if (!unknown.empty()) {
    std::string msg = "config: " + origin_ + ": unknown key(s):";
    for (const auto& k : unknown) msg += " '" + k + "'";
    throw ValidationError(msg);
  }
}

}  // namespace bidrank
