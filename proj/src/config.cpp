#include "evoctrl/config.hpp"

#include <fstream>
#include <sstream>

namespace evoctrl {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& s) {
  if (!s.empty() && (s[0] == '#' || s[0] == ';')) return "";
  const auto pos = s.find(" #");
  return pos == std::string::npos ? s : s.substr(0, pos);
}

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path);
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  Section* current = nullptr;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(strip_comment(trim(line)));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
      cfg.sections_.push_back({trim(line.substr(1, line.size() - 2)), {}});
      current = &cfg.sections_.back();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    if (!current) {
      cfg.sections_.push_back({"", {}});
      current = &cfg.sections_.back();
    }
    current->entries.push_back({trim(line.substr(0, eq)), trim(line.substr(eq + 1))});
  }
  return cfg;
}

const std::string* Config::find(const std::string& section, const std::string& key) const {
  for (const auto& s : sections_) {
    if (s.name != section) continue;
    for (const auto& e : s.entries)
      if (e.key == key) return &e.value;
  }
  return nullptr;
}

bool Config::has_section(const std::string& section) const {
  for (const auto& s : sections_)
    if (s.name == section) return true;
  return false;
}

bool Config::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

std::string Config::get_string(const std::string& section, const std::string& key) const {
  const std::string* v = find(section, key);
  if (!v) throw ConfigError("missing config field " + section + "." + key);
  return *v;
}

std::string Config::get_string_or(const std::string& section, const std::string& key,
                                  const std::string& fallback) const {
  const std::string* v = find(section, key);
  return v ? *v : fallback;
}

double Config::get_double(const std::string& section, const std::string& key) const {
  const std::string raw = get_string(section, key);
  try {
    std::size_t pos = 0;
    const double v = std::stod(raw, &pos);
    if (pos != raw.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config field " + section + "." + key + " is not a number: " + raw);
  }
}

double Config::get_double_or(const std::string& section, const std::string& key,
                             double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

int Config::get_int(const std::string& section, const std::string& key) const {
  const std::string raw = get_string(section, key);
  try {
    std::size_t pos = 0;
    const int v = std::stoi(raw, &pos);
    if (pos != raw.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config field " + section + "." + key + " is not an integer: " + raw);
  }
}

int Config::get_int_or(const std::string& section, const std::string& key, int fallback) const {
  return has(section, key) ? get_int(section, key) : fallback;
}

std::vector<double> Config::get_doubles(const std::string& section, const std::string& key) const {
  const std::string raw = get_string(section, key);
  std::istringstream in(raw);
  std::vector<double> out;
  double v;
  while (in >> v) out.push_back(v);
  if (out.empty() || !in.eof())
    throw ConfigError("config field " + section + "." + key + " is not a list of numbers: " + raw);
  return out;
}

}  // namespace evoctrl
