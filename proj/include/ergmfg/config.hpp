#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ergmfg {

/// Section/key/value view of a structured-text config. Parsing is strict:
/// every key must be consumed by a reader, leftovers fail the run.
class Config {
 public:
  static Config parse_text(const std::string& text);
  static Config parse_file(const std::string& path);

  bool has_section(const std::string& s) const;
  bool has(const std::string& sec, const std::string& key) const;

  std::string get_string(const std::string& sec, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& sec, const std::string& key, double fallback) const;
  int get_int(const std::string& sec, const std::string& key, int fallback) const;
  bool get_bool(const std::string& sec, const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& sec, const std::string& key,
                                  const std::vector<double>& fallback) const;
  std::vector<std::string> get_strings(const std::string& sec, const std::string& key,
                                       const std::vector<std::string>& fallback) const;

  /// Throws ConfigError listing every key that was never read and every
  /// section that is not recognized.
  void enforce_consumed(const std::set<std::string>& known_sections) const;

  const std::map<std::string, std::map<std::string, std::string>>& sections() const {
    return data_;
  }

 private:
  std::map<std::string, std::map<std::string, std::string>> data_;
  mutable std::set<std::string> consumed_;  // "section/key"
};

}  // namespace ergmfg
