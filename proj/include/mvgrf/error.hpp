#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mvgrf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input violates a documented domain restriction (non-finite frequency,
// grid too small, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be positive (semi)definite is not. Carries the
/// offending eigenvalue or pivot.
class DefinitenessError : public Error {
 public:
  DefinitenessError(const std::string& what, double value,
                    std::ptrdiff_t index = -1)
      : Error(what), value_(value), index_(index) {}

  double value() const { return value_; }
  std::ptrdiff_t index() const { return index_; }

 private:
  double value_;
  std::ptrdiff_t index_;
};

class SymmetryError : public Error {
 public:
  using Error::Error;
};

class InconsistentInputError : public Error {
 public:
  using Error::Error;
};

class WrongOperationError : public Error {
 public:
  using Error::Error;
};

class DegenerateKernelError : public Error {
 public:
  using Error::Error;
};

class StepError : public Error {
 public:
  using Error::Error;
};

class BoundaryError : public Error {
 public:
  using Error::Error;
};

// File-format problems (bad magic, unknown version or tag).
class FormatError : public Error {
 public:
  using Error::Error;
};

class LengthError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace mvgrf
