#pragma once

#include <stdexcept>
#include <string>

namespace xokde {

// Base class for everything this library throws.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Operands with incompatible dimensions were mixed.
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error(what) {}
};

// A factorization hit a non-positive or non-finite pivot. This normally
// means a covariance reached a numeric kernel without being corrected first.
class SingularityError : public Error {
 public:
  explicit SingularityError(const std::string& what) : Error(what) {}
};

// An estimate was requested from a model with fewer than two effective
// samples; no meaningful bandwidth exists yet.
class InsufficientSamplesError : public Error {
 public:
  explicit InsufficientSamplesError(const std::string& what) : Error(what) {}
};

// Malformed input text. Carries 1-based line/column of the offending token.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(what), line_(line), column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what) {}
};

class InvalidArgumentError : public Error {
 public:
  explicit InvalidArgumentError(const std::string& what) : Error(what) {}
};

}  // namespace xokde
