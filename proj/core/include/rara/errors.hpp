#pragma once

#include <stdexcept>
#include <string>

namespace rara {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The closed-form stationary solution hit a vanishing determinant.
class SingularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// More collided devices than observations (K > M+1).
class UnderdeterminedError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace rara
