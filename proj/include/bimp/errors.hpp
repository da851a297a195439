#pragma once

#include <stdexcept>
#include <string>

namespace bimp {

/// Argument outside the mathematical domain of an operation (e.g. dof <= 2).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Factorization failed even after the maximal regularization.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model evaluation produced non-finite values.
class PropagationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (weights, scenario, trace).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bimp
