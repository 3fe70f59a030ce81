#pragma once

#include <stdexcept>
#include <string>

namespace hswitch {

// Base for every error raised by the library. Subclasses exist where callers
// are expected to react differently (fall back, skip a sweep point, ...).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Raised by polar_unitary_factor when the smallest singular value is too
// small for the unitary factor to be unique.
class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

class NotHermitianError : public Error {
 public:
  using Error::Error;
};

class GradientCheckError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace hswitch
