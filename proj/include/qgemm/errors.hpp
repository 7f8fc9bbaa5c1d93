#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace qgemm {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// BLAS-style argument error: `argument()` is the 1-based position of the
/// offending parameter, as xerbla would report it.
class ArgumentError : public std::invalid_argument {
 public:
  ArgumentError(int argument, const std::string& routine)
      : std::invalid_argument("parameter " + std::to_string(argument) + " had an illegal value in " + routine),
        argument_(argument) {}
  int argument() const { return argument_; }

 private:
  int argument_;
};

/// Invalid array, board or benchmark configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Exact zero pivot; `column()` is the global 0-based column index.
class SingularMatrixError : public std::runtime_error {
 public:
  explicit SingularMatrixError(std::int64_t column)
      : std::runtime_error("matrix is singular: zero pivot in column " + std::to_string(column)),
        column_(column) {}
  std::int64_t column() const { return column_; }

 private:
  std::int64_t column_;
};

/// Malformed input file; `line()` is 1-based, 0 when not line oriented.
class FormatError : public std::runtime_error {
 public:
  FormatError(std::size_t line, const std::string& what)
      : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace qgemm
