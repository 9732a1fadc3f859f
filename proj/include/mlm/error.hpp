#pragma once

#include <stdexcept>
#include <string>

namespace mlm {

/// Base class for every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model, design, or option value that violates its documented constraints.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Input argument outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// D = diag(1/rho) L - R could not be inverted numerically.
class SingularMatrix : public Error {
 public:
  using Error::Error;
};

/// Parameter vector outside the feasible parameter space.
class Infeasible : public Error {
 public:
  Infeasible(const std::string& what, int setting)
      : Error(what), setting_(setting) {}

  /// Index of the first offending covariate setting, or -1 when not tied to one.
  int setting() const noexcept { return setting_; }

 private:
  int setting_;
};

/// Fitting could not start or could not produce an estimate.
class FitError : public Error {
 public:
  using Error::Error;
};

/// Malformed input files or configuration.
class InputError : public Error {
 public:
  using Error::Error;
};

}  // namespace mlm
