#pragma once

#include <stdexcept>
#include <string>

namespace mcfse {

/// Bad parameter values, index ranges or vector lengths.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The peak search could not bracket a maximum of the impulse response.
class SearchFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A tap system was singular, not positive definite, or too ill conditioned.
class ConditioningError : public std::runtime_error {
 public:
  ConditioningError(const std::string& what, double condition)
      : std::runtime_error(what), condition_(condition) {}

  /// Reciprocal of the estimated reciprocal condition number (inf if singular).
  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

/// Internal numerical breakdown (non-finite rate, etc.).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mcfse
