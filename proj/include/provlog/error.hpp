#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace provlog {

enum class ErrorCode {
  KindConflict,
  UnknownEntity,
  UnknownPredicate,
  ArityMismatch,
  TypeMismatch,
  ParseError,
  InvalidProgram,
  Unstratifiable,
  ResourceLimit,
  NotDerived,
  InfeasibleSpec,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure the library reports. The code is the
/// stable contract; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised while reading the JSONL event format. `line()` is 1-based.
class ParseError : public Error {
 public:
  ParseError(ErrorCode code, std::size_t line, const std::string& message)
      : Error(code, "line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace provlog
