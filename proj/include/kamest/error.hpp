#pragma once

#include <stdexcept>
#include <string>

namespace kamest {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Raised when the integrable part has a (numerically) singular Hessian.
class NondegeneracyError : public Error {
 public:
  using Error::Error;
};

/// Raised when a structural inequality between constants is violated.
class ConstraintError : public Error {
 public:
  using Error::Error;
};

class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class ResonanceError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A query outside the region where a local construction is guaranteed.
class OutOfRangeError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace kamest
