#pragma once

#include <stdexcept>
#include <string>

namespace condshap {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exact enumeration requested for a feature count outside the supported range.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Vector/matrix dimensions do not match.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid scalar parameter (e.g. |rho| >= 1, bandwidth <= 0).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Data precondition violated (e.g. empty training set).
class DataError : public Error {
 public:
  using Error::Error;
};

// Covariance matrix failed the symmetric-positive-definite check.
class NotSpdError : public Error {
 public:
  using Error::Error;
};

// Gaussian conditioning failed for a specific coalition.
class ConditioningError : public Error {
 public:
  using Error::Error;
};

// Rank-deficient least-squares system with no regularization.
class SingularSystemError : public Error {
 public:
  using Error::Error;
};

// Non-finite or malformed model input.
class InputError : public Error {
 public:
  using Error::Error;
};

// Contribution table queried or aggregated with absent coalitions.
class MissingCoalitionError : public Error {
 public:
  using Error::Error;
};

// Explanation sets do not cover the same observation ids.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

// Invalid experiment configuration (CLI exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// File read/write failure (CLI exit code 2).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace condshap
