#pragma once

#include <stdexcept>
#include <string>

namespace typeb {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input outside an operation's domain (branch points, atoms, bad indices).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or malformed input data.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver failed to reach its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Non-finite intermediate values.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace typeb
