#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace evoctrl {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Key/value configuration with named sections:
///   [section]
///   key = value        # comment
/// Values are untyped strings; typed getters throw ConfigError naming the
/// offending section.key.  Section and key order is preserved for the
/// manifest echo.
class Config {
 public:
  struct Entry {
    std::string key;
    std::string value;
  };
  struct Section {
    std::string name;
    std::vector<Entry> entries;
  };

  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has_section(const std::string& section) const;
  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string_or(const std::string& section, const std::string& key,
                            const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double_or(const std::string& section, const std::string& key, double fallback) const;
  int get_int(const std::string& section, const std::string& key) const;
  int get_int_or(const std::string& section, const std::string& key, int fallback) const;
  /// Whitespace-separated list of reals.
  std::vector<double> get_doubles(const std::string& section, const std::string& key) const;

  const std::vector<Section>& sections() const { return sections_; }

 private:
  const std::string* find(const std::string& section, const std::string& key) const;
  std::vector<Section> sections_;
};

}  // namespace evoctrl
