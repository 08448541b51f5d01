#pragma once

#include <stdexcept>
#include <string>

namespace hyperlore {

// Base class for everything thrown by this library. CLI code maps these to
// exit status 1 (bad input) or 2 (numerical failure); see tools/hyperlore.cpp.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mismatched vector lengths or matrix shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A point or direction violates the constraint of the manifold it claims to
// live on (off the hyperboloid sheet, outside the unit ball, non-orthonormal
// columns, non-tangent direction, ...).
class ConstraintViolation : public Error {
 public:
  using Error::Error;
};

// NaN or infinity where a finite value is required, or an iteration that
// diverged beyond recovery.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Rank-deficient input to an operation that needs full rank.
class SingularityError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents. Messages carry the path and the offending line.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Filesystem failure: missing file, unreadable or unwritable path.
class IoError : public Error {
 public:
  using Error::Error;
};

// Out-of-range or inconsistent configuration value.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace hyperlore
