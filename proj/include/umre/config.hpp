#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "umre/errors.hpp"

namespace umre {

// Sectioned key=value config. '#' and ';' start comments; whitespace is
// trimmed around keys and values.
class Config {
 public:
  static Config load(const std::string& path);
  static Config from_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& section, const std::string& key) const;

  std::string get_str(const std::string& section, const std::string& key) const;
  std::string get_str(const std::string& section, const std::string& key,
                      const std::string& fallback) const;
  long long get_int(const std::string& section, const std::string& key, long long fallback) const;
  long long get_int(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::vector<double> get_double_list(const std::string& section, const std::string& key) const;
  std::vector<std::string> get_str_list(const std::string& section,
                                        const std::string& key) const;

  void set(const std::string& section, const std::string& key, const std::string& value);

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
  const std::string* find(const std::string& section, const std::string& key) const;
};

}  // namespace umre
