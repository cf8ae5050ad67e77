#pragma once

#include <stdexcept>
#include <string>

namespace icdd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid geometry, configuration or argument supplied by the caller.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A linear system could not be factorized or solved.
class SingularSystemError : public Error {
 public:
  SingularSystemError(const std::string& what, long pivot)
      : Error(what), pivot_(pivot) {}

  /// Index of the first vanishing pivot, or -1 when unknown.
  long pivot() const noexcept { return pivot_; }

 private:
  long pivot_;
};

}  // namespace icdd
