#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace loopsim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input data: missing file, unparseable cell, non-positive price, bad shape.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an operation's precondition.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Normal equations are singular (only reachable with alpha = 0).
class SingularSystemError : public Error {
 public:
  using Error::Error;
};

/// R^2 is undefined when every true value is identical.
class ZeroVarianceError : public Error {
 public:
  using Error::Error;
};

/// An internal consistency check failed. Always an implementation bug.
class InternalError : public Error {
 public:
  using Error::Error;
};

/// Raised by the simulation engine; carries the step at which it happened.
class SimulationError : public Error {
 public:
  SimulationError(const std::string& what, std::size_t step)
      : Error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace loopsim
