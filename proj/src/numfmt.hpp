#pragma once

#include <fmt/format.h>

#include <optional>
#include <string>

namespace tem::detail {

// Fixed-point with at most `decimals` places, trailing zeros removed
// ("10", "0.5", "-0.333333"). Negative zero prints as "0".
inline std::string format_number(double value, int decimals = 6) {
  std::string s = fmt::format("{:.{}f}", value, decimals);
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  if (s == "-0") s = "0";
  return s;
}

inline std::string format_optional(const std::optional<double>& value, int decimals = 6) {
  return value ? format_number(*value, decimals) : std::string();
}

}  // namespace tem::detail
