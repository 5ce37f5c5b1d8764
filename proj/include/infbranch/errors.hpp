#pragma once

#include <stdexcept>
#include <string>

namespace infbranch {

/// Malformed or inconsistent model / input data.
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An iterative method ran out of iterations.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A proven mathematical invariant failed numerically: signals a bug in the
/// model or in the arithmetic, never bad user input.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace infbranch
