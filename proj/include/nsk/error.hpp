#pragma once

#include <stdexcept>
#include <string>

namespace nsk {

/// Base class for all solver errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two objects defined on different grids were combined.
class LevelMismatch : public Error {
 public:
  using Error::Error;
};

/// Invalid argument to a constructor or operation.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Newton's method on the state equation failed, even with viscosity continuation.
class NonlinearDivergence : public Error {
 public:
  using Error::Error;
};

/// A sparse or dense factorization hit a zero pivot.
class SingularMatrix : public Error {
 public:
  using Error::Error;
};

/// Divergence data of a saddle-point solve does not have zero mean.
class IncompatibleData : public Error {
 public:
  using Error::Error;
};

/// A preconditioner or operator expected to be positive definite is not.
class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

/// Configuration parse or validation failure.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File system failure; the message carries the path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace nsk
