#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fkbound {

// Failure taxonomy. The CLI maps these onto exit codes:
//   ValidationError -> 2, NumericalFailure -> 3, VerificationFailure -> 4.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Parameter outside the domain where a formula is defined.
class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// A weighted norm or iterated integral diverges.
class NonIntegrable : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

class QuadratureFailure : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

class NoConvergence : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

class StepSizeFailure : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

class NoLinearSlope : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

class GridTooSmall : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

class NotPositiveDefinite : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A checked inequality (bound, sandwich, identity) did not hold.
class VerificationFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace fkbound
