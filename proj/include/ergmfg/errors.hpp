#pragma once

#include <stdexcept>
#include <string>

namespace ergmfg {

/// Base class for all solver-specific failures.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (bad keys, out-of-range parameters,
/// grids too coarse for the requested geometry).
struct ConfigError : Error {
  using Error::Error;
};

/// A nonlinear or linear solve failed to converge. Carries the last residual.
struct SolverError : Error {
  double residual = 0.0;
  SolverError(const std::string& msg, double res) : Error(msg), residual(res) {}
};

/// Two independent estimates of the same quantity disagree beyond tolerance.
struct DiagnosticError : Error {
  using Error::Error;
};

/// The assembled operator does not have the structure the method requires
/// (e.g. the stationary operator's kernel is not one-dimensional).
struct StructuralError : Error {
  using Error::Error;
};

/// Continuation members stopped approaching each other; mass escapes towards
/// the boundary instead of settling.
struct TightnessError : Error {
  using Error::Error;
};

}  // namespace ergmfg
