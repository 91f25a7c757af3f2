#pragma once

#include <stdexcept>
#include <string>

namespace metadiv {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "error"; }
};

class InvalidInput : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "invalid_input"; }
};

class InsufficientData : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "insufficient_data"; }
};

class UndefinedResult : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "undefined_result"; }
};

/// Raised by iterative solvers that hit their iteration cap.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double final_gradient_norm)
      : Error(what), final_gradient_norm_(final_gradient_norm) {}
  const char* kind() const noexcept override { return "convergence"; }
  double final_gradient_norm() const noexcept { return final_gradient_norm_; }

 private:
  double final_gradient_norm_;
};

/// Raised when a value that must stay within [0,1] overshoots beyond tolerance.
class NumericalDiagnostic : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "numerical_diagnostic"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

}  // namespace metadiv
