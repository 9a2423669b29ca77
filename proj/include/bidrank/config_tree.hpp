#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "bidrank/errors.hpp"

namespace bidrank {

// Minimal key-value tree config format (a TOML subset, documented in the README):
//   # comment
//   key = value            value: "string" | integer | float | true/false | [array]
//   [section]              keys below get the "section." prefix
//   a.b = value            dotted keys nest
// Arrays may nest once ([[1,0],[0,1]]) for bid matrices.
class ConfigTree {
 public:
  struct Value;
  using Array = std::vector<Value>;
  struct Value {
    std::variant<std::string, long long, double, bool, Array> data;
  };

  static ConfigTree parse_file(const std::string& path);
  static ConfigTree parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const;

  long long require_int(const std::string& key) const;
  double require_double(const std::string& key) const;  // integers promote
  bool require_bool(const std::string& key) const;
  std::string require_string(const std::string& key) const;
  std::vector<double> require_double_array(const std::string& key) const;
  std::vector<long long> require_int_array(const std::string& key) const;
  std::vector<std::vector<long long>> require_int_matrix(const std::string& key) const;
  std::vector<std::string> require_string_array(const std::string& key) const;

  long long get_int(const std::string& key, long long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;

  // Every key must have been read through one of the accessors above; unknown
  // keys are a validation error (catches typos in scenario files).
  void check_all_consumed() const;

 private:
  const Value& find(const std::string& key) const;

  std::string origin_;
  std::map<std::string, Value> values_;
  mutable std::set<std::string> consumed_;
};

}  // namespace bidrank
