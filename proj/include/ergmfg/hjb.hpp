#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "ergmfg/domain.hpp"

namespace ergmfg {

/// How the infinite Dirichlet data is imposed on the outermost node layer.
enum class BoundaryLayer { Profile, LargeConstant };

/// Closed-form constants of the explosive boundary behavior for H(p)=|p|^q.
double profile_prefactor(double q);        // C_q = (q-1)^{(q-2)/(q-1)} / (2-q), q < 2
double gradient_limit_constant(double q);  // (q-1)^{-1/(q-1)}
double drift_limit_constant(double q);     // q/(q-1)
/// Leading-order profile value at boundary distance t: C_q t^{(q-2)/(q-1)}
/// for q < 2, -log t for q = 2.
double explosive_profile(double q, double t);

struct HJBProblem {
  double q = 1.5;                     // exponent in (1,2]
  GridField g;                        // bounded right-hand side
  const Domain* dom = nullptr;
  std::size_t x0 = 0;                 // normalization node, inside Omega_eps0
  BoundaryLayer boundary_layer = BoundaryLayer::Profile;

  std::vector<double> lambda_schedule = {1e-1, 1e-2, 1e-3, 1e-4};
  double newton_tol = 1e-12;          // scaled nonlinear residual, max-norm
  int max_newton_iter = 200;
  double rho_cross_tol = 1e-4;        // discount extrapolation vs direct solve

  void validate() const;
};

struct ValueSolution {
  GridField u;            // normalized: u(x0) = 0
  double rho = 0.0;
  double q = 0.0;
  std::size_t x0 = 0;
  double residual_norm = 0.0;
  /// (lambda, lambda * u_lambda(x0)) pairs when the vanishing-discount path ran.
  std::vector<std::pair<double, double>> lambda_trace;
  double rho_extrapolated = 0.0;  // limit of the lambda trace
};

/// Optimal feedback b = q |Du|^{q-2} Du from centered differences of u.
/// Nodes with |Du| below 1e-12 carry b = 0. Valid on the interior mask
/// (support_delta = h).
struct DriftField {
  VectorGridField b;
  double q = 0.0;
};

/// Solves -Lap(u) + |Du|^q + lambda u = g with the explosive Dirichlet layer.
/// The interior plateau lambda*u(x0) is carried as a separate unknown so the
/// solve stays well conditioned down to lambda -> 0; the returned field
/// satisfies the discounted equation's discrete residual on interior nodes.
GridField solve_discounted(const HJBProblem& p, double lambda);

/// Ergodic solve: vanishing-discount schedule with Richardson extrapolation,
/// then a direct Newton solve of the ergodic system closed by u(x0) = 0.
/// Throws DiagnosticError when the two rho estimates disagree.
ValueSolution solve_ergodic(const HJBProblem& p);

DriftField drift_from_value(const ValueSolution& sol);

/// Centered-difference gradient; zero at the outermost layer.
VectorGridField centered_gradient(const Domain& dom, const GridField& u);

/// Scaled max-norm residual of -Lap(u)+|Du|^q+lambda*u+rho-g over interior
/// nodes with boundary distance > delta.
double hjb_residual(const Domain& dom, const GridField& u, double q, const GridField& g,
                    double lambda, double rho, double delta);

/// The scheme's monotone value of |Du|^q at an interior node (centered where
/// the mesh Peclet condition holds, Godunov upwind otherwise), exposed so
/// tests can evaluate residuals of candidate sub/supersolutions.
double numerical_hamiltonian(const Domain& dom, const GridField& u, std::size_t i, double q);

struct AsymptoticsBand {
  double d = 0.0;            // band distance (exact boundary distance)
  double u_mean = 0.0;
  double ratio = 0.0;        // u / profile(d)
  double grad_scaled = 0.0;  // (Du.nu) d^{1/(q-1)}
  double drift_scaled = 0.0; // (b.nu) d
  int count = 0;
};

struct FitWindow {
  double u_lo = 0.0, u_hi = 0.0;        // bands used for the value fit
  double grad_lo = 0.0, grad_hi = 0.0;  // bands used for the gradient/drift limits
};

struct AsymptoticsReport {
  double exponent_fit = 0.0;   // free log-log slope of u vs d
  double prefactor_fit = 0.0;  // with the model exponent (q-2)/(q-1) imposed
  double log_slope = 0.0;      // q = 2: slope of u against -log d
  double gradient_limit = 0.0; // extrapolated (Du.nu) d^{1/(q-1)}
  double drift_limit = 0.0;    // extrapolated (b.nu) d
  double grad_constant_sup = 0.0;  // max |Du| d^{1/(q-1)} over Omega_{2h}
  std::vector<AsymptoticsBand> bands;
  FitWindow window;
};

/// Per-band boundary profile of a solution plus the fitted limits of the
/// explosive asymptotics. Needs at least 6 bands between 2h and eps0/2.
AsymptoticsReport fit_boundary_asymptotics(const ValueSolution& sol);
AsymptoticsReport fit_boundary_asymptotics(const ValueSolution& sol, const FitWindow& window);

}  // namespace ergmfg
