#pragma once

#include <stdexcept>
#include <string>

namespace cosim {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input text does not follow a documented file layout. Carries the
/// 1-based line number when one is known (0 otherwise).
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A target word is marked zero or several times in one context.
class AmbiguityError : public Error {
 public:
  using Error::Error;
};

/// A marked surface does not correspond to the declared word.
class MismatchError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Caller broke a documented precondition (length/dimension mismatch,
/// empty input, misaligned ids).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A layer count or index does not fit the stack it is applied to.
class RangeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Zero-norm vector or zero-variance series where a direction is needed.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

}  // namespace cosim
