#pragma once

#include <stdexcept>
#include <string>

namespace chainkit {

/// Raised when a model, distribution, or input file violates a structural
/// axiom (row mass, negative weight, malformed spec, ...).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when an iterative solver fails to meet its tolerance within its
/// iteration budget.
class SolveError : public std::runtime_error {
 public:
  SolveError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}

  double residual() const { return residual_; }

 private:
  double residual_ = 0.0;
};

}  // namespace chainkit
