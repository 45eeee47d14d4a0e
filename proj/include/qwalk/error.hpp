#pragma once

#include <stdexcept>
#include <string>

namespace qwalk {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on user-supplied data was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A numerical backend failed. `stage()` names the failing computation.
class NumericalError : public Error {
 public:
  NumericalError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Eigendecomposition of a symmetric generator did not succeed.
class DecompositionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// An iterative method exhausted its step budget.
class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace qwalk
