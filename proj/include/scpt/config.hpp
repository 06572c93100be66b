#pragma once

#include <map>
#include <string>
#include <vector>

#include "scpt/errors.hpp"

namespace scpt {

// Line-oriented "key = value" configuration with [section] headers.
// Every line is a comment (#...), blank, section header, or key=value;
// anything else is a parse error. Keys not in the known-key table are
// errors. Missing keys take the documented defaults.
class Config {
 public:
  Config();  // all defaults

  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text);

  // canonical text form (sections and keys in table order)
  std::string serialize() const;
  void write_file(const std::string& path) const;

  // typed access; key is "section.name"
  const std::string& get_str(const std::string& key) const;
  double get_real(const std::string& key) const;
  int get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

  const std::map<std::string, std::string>& entries() const { return values_; }

  struct KeySpec {
    const char* key;  // "section.name"
    const char* def;  // default value
    const char* doc;
  };
  static const std::vector<KeySpec>& known_keys();

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace scpt
