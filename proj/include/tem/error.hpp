#pragma once

#include <stdexcept>
#include <string>

namespace tem {

enum class ErrorCode {
  kInvalidArgument = 1,
  kIo = 2,
  kParse = 3,
  kUndefined = 4,
  kRunFailed = 5,
};

// Single exception type for the library; the C API maps `code()` onto
// tem_status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(ErrorCode::kParse, line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  /// 1-based line number, 0 when unknown.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace tem
