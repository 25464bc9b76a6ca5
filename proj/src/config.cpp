#include "ergmfg/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "ergmfg/errors.hpp"

namespace ergmfg {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& sec, const std::string& key, const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("[" + sec + "] " + key + ": cannot parse '" + s + "' as a number");
  }
}

}  // namespace

Config Config::parse_text(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("config line " + std::to_string(lineno) +
                                                ": malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError("config line " + std::to_string(lineno) +
                                             ": empty section name");
      cfg.data_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    if (section.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": key outside any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (cfg.data_[section].count(key))
      throw ConfigError("duplicate key '" + key + "' in section [" + section + "]");
    cfg.data_[section][key] = value;
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_text(ss.str());
}

bool Config::has_section(const std::string& s) const { return data_.count(s) > 0; }

bool Config::has(const std::string& sec, const std::string& key) const {
  const auto it = data_.find(sec);
  return it != data_.end() && it->second.count(key) > 0;
}

std::string Config::get_string(const std::string& sec, const std::string& key,
                               const std::string& fallback) const {
  consumed_.insert(sec + "/" + key);
  const auto it = data_.find(sec);
  if (it == data_.end()) return fallback;
  const auto kt = it->second.find(key);
  return kt == it->second.end() ? fallback : kt->second;
}

double Config::get_double(const std::string& sec, const std::string& key, double fallback) const {
  if (!has(sec, key)) {
    consumed_.insert(sec + "/" + key);
    return fallback;
  }
  return parse_double(sec, key, get_string(sec, key, ""));
}

int Config::get_int(const std::string& sec, const std::string& key, int fallback) const {
  const double v = get_double(sec, key, static_cast<double>(fallback));
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v)
    throw ConfigError("[" + sec + "] " + key + ": expected an integer");
  return i;
}

bool Config::get_bool(const std::string& sec, const std::string& key, bool fallback) const {
  if (!has(sec, key)) {
    consumed_.insert(sec + "/" + key);
    return fallback;
  }
  const std::string s = get_string(sec, key, "");
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("[" + sec + "] " + key + ": expected a boolean, got '" + s + "'");
}

std::vector<double> Config::get_doubles(const std::string& sec, const std::string& key,
                                        const std::vector<double>& fallback) const {
  if (!has(sec, key)) {
    consumed_.insert(sec + "/" + key);
    return fallback;
  }
  std::istringstream ss(get_string(sec, key, ""));
  std::vector<double> out;
  std::string tok;
  while (ss >> tok) out.push_back(parse_double(sec, key, tok));
  if (out.empty()) throw ConfigError("[" + sec + "] " + key + ": empty list");
  return out;
}

std::vector<std::string> Config::get_strings(const std::string& sec, const std::string& key,
                                             const std::vector<std::string>& fallback) const {
  if (!has(sec, key)) {
    consumed_.insert(sec + "/" + key);
    return fallback;
  }
  std::istringstream ss(get_string(sec, key, ""));
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

void Config::enforce_consumed(const std::set<std::string>& known_sections) const {
  std::string bad;
  for (const auto& [sec, kv] : data_) {
    if (!known_sections.count(sec)) {
      bad += (bad.empty() ? "" : ", ") + ("[" + sec + "]");
      continue;
    }
    for (const auto& [key, _] : kv)
      if (!consumed_.count(sec + "/" + key)) bad += (bad.empty() ? "" : ", ") + (sec + "." + key);
  }
  if (!bad.empty()) throw ConfigError("unrecognized config entries: " + bad);
}

}  // namespace ergmfg
