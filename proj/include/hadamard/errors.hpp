#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hadamard {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation
/// (parameter ranges, mismatched spaces, invalid points).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The operation exists but is not available for this space or set kind.
class UnsupportedOperation : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment wiring: unknown names, schedule-class violations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An inner numerical solver failed to reach its tolerance.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace hadamard
