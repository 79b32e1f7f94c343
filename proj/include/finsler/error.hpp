#pragma once

/**
 * @file error.hpp
 * @brief Exception hierarchy shared by every finsler module.
 */

#include <stdexcept>
#include <string>

namespace finsler {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A derivative was requested beyond the order carried by a jet, or a jet
/// exceeded the configured resource limits.
class OrderBudgetError : public Error {
 public:
  using Error::Error;
};

/// Function applied outside its domain (log of a non-positive value, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Raised by expression evaluation; carries the offending sub-expression.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& message, std::string subexpression)
      : Error(message + " in '" + subexpression + "'"),
        subexpression_(std::move(subexpression)) {}

  const std::string& subexpression() const noexcept { return subexpression_; }

 private:
  std::string subexpression_;
};

/// Spec text could not be parsed or failed a static check.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, int line, int column, const std::string& file = "")
      : Error((file.empty() ? "" : file + ":") + std::to_string(line) + ":" + std::to_string(column) + ": " + message),
        message_(message),
        line_(line),
        column_(column) {}

  const std::string& message() const noexcept { return message_; }
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  std::string message_;
  int line_;
  int column_;
};

/// Matrix singular or too badly conditioned to invert.
class SingularityError : public Error {
 public:
  SingularityError(const std::string& message, double condition)
      : Error(message), condition_(condition) {}

  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

/// An operation was called outside the regime where its claim holds.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration (CLI flags, sample counts, sampling domains).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical integration failure.
class IntegrationError : public Error {
 public:
  using Error::Error;
};

}  // namespace finsler
