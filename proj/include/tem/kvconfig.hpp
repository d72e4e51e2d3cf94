#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tem {

// Reader for the TOML-style key-value subset used by manifests, synth
// profiles, tracker configs and seqinfo.ini:
//
//   # comment
//   [section.name]
//   key = 0.5
//   label = "text"
//   list = ["a", "b"]
//   flag = true
//   bare=value            (seqinfo style, unquoted)
//
// Keys that appear before any header belong to the section "".
class KvConfig {
 public:
  using Section = std::map<std::string, std::string>;

  static KvConfig parse(std::string_view text);
  static KvConfig load(const std::filesystem::path& path);

  bool has_section(const std::string& section) const;
  const Section* section(const std::string& section) const;
  /// Section names starting with `prefix` (e.g. "profile."), sorted.
  std::vector<std::string> sections_with_prefix(const std::string& prefix) const;

  std::optional<std::string> raw(const std::string& section, const std::string& key) const;

  std::optional<std::string> get_string(const std::string& section, const std::string& key) const;
  std::optional<double> get_double(const std::string& section, const std::string& key) const;
  std::optional<long long> get_int(const std::string& section, const std::string& key) const;
  std::optional<bool> get_bool(const std::string& section, const std::string& key) const;
  std::optional<std::vector<std::string>> get_string_list(const std::string& section,
                                                          const std::string& key) const;
  std::optional<std::vector<long long>> get_int_list(const std::string& section,
                                                     const std::string& key) const;

 private:
  std::map<std::string, Section> sections_;
};

/// Value converters shared with the CLI. Throw tem::Error on bad input.
double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);

}  // namespace tem
