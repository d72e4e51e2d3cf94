#include "tem/kvconfig.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tem/error.hpp"

namespace tem {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Cuts a trailing `# comment` that is not inside double quotes.
std::string_view strip_comment(std::string_view s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (!quoted && s[i] == '#') return s.substr(0, i);
  }
  return s;
}

std::string unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return std::string(s.substr(1, s.size() - 2));
  return std::string(s);
}

std::vector<std::string> split_list(std::string_view s, const std::string& where) {
  s = trim(s);
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') throw Error(ErrorCode::kParse, where + ": expected a [..] list");
  s = s.substr(1, s.size() - 2);
  std::vector<std::string> items;
  std::string current;
  bool quoted = false;
  for (char c : s) {
    if (c == '"') quoted = !quoted;
    if (c == ',' && !quoted) {
      items.push_back(unquote(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!trim(current).empty()) items.push_back(unquote(current));
  return items;
}

}  // namespace

double parse_double(std::string_view text, std::string_view what) {
  text = trim(text);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
    throw Error(ErrorCode::kParse, std::string(what) + ": not a number: '" + std::string(text) + "'");
  }
  return value;
}

long long parse_int(std::string_view text, std::string_view what) {
  text = trim(text);
  long long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kParse, std::string(what) + ": not an integer: '" + std::string(text) + "'");
  }
  return value;
}

KvConfig KvConfig::parse(std::string_view text) {
  KvConfig cfg;
  std::string current;
  cfg.sections_[current];
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    line = trim(line);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    line = trim(strip_comment(line));
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "unterminated section header");
      current = std::string(trim(line.substr(1, line.size() - 2)));
      if (current.empty()) throw ParseError(line_no, "empty section name");
      cfg.sections_[current];
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected key = value");
    std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw ParseError(line_no, "empty key");
    cfg.sections_[current][key] = std::string(trim(line.substr(eq + 1)));
  }
  return cfg;
}

KvConfig KvConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse(ss.str());
  } catch (const ParseError& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

bool KvConfig::has_section(const std::string& section) const { return sections_.count(section) != 0; }

const KvConfig::Section* KvConfig::section(const std::string& section) const {
  auto it = sections_.find(section);
  return it == sections_.end() ? nullptr : &it->second;
}

std::vector<std::string> KvConfig::sections_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [name, _] : sections_) {
    if (name.size() > prefix.size() && name.compare(0, prefix.size(), prefix) == 0) out.push_back(name);
  }
  return out;
}

std::optional<std::string> KvConfig::raw(const std::string& section, const std::string& key) const {
  const Section* s = this->section(section);
  if (!s) return std::nullopt;
  auto it = s->find(key);
  if (it == s->end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> KvConfig::get_string(const std::string& section, const std::string& key) const {
  auto v = raw(section, key);
  if (!v) return std::nullopt;
  return unquote(*v);
}

std::optional<double> KvConfig::get_double(const std::string& section, const std::string& key) const {
  auto v = get_string(section, key);
  if (!v) return std::nullopt;
  return parse_double(*v, "[" + section + "] " + key);
}

std::optional<long long> KvConfig::get_int(const std::string& section, const std::string& key) const {
  auto v = get_string(section, key);
  if (!v) return std::nullopt;
  return parse_int(*v, "[" + section + "] " + key);
}

std::optional<bool> KvConfig::get_bool(const std::string& section, const std::string& key) const {
  auto v = get_string(section, key);
  if (!v) return std::nullopt;
  if (*v == "true" || *v == "1") return true;
  if (*v == "false" || *v == "0") return false;
  throw Error(ErrorCode::kParse, "[" + section + "] " + key + ": expected true or false");
}

std::optional<std::vector<std::string>> KvConfig::get_string_list(const std::string& section,
                                                                  const std::string& key) const {
  auto v = raw(section, key);
  if (!v) return std::nullopt;
  return split_list(*v, "[" + section + "] " + key);
}

std::optional<std::vector<long long>> KvConfig::get_int_list(const std::string& section,
                                                             const std::string& key) const {
  auto items = get_string_list(section, key);
  if (!items) return std::nullopt;
  std::vector<long long> out;
  for (const auto& item : *items) out.push_back(parse_int(item, "[" + section + "] " + key));
  return out;
}

}  // namespace tem
