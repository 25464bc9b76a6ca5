#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "ergmfg/coupling.hpp"
#include "ergmfg/domain.hpp"
#include "ergmfg/hjb.hpp"
#include "ergmfg/kfp.hpp"

namespace ergmfg {

struct MFGConfig {
  const Domain* dom = nullptr;
  const Coupling* coupling = nullptr;
  double q = 1.5;
  double gamma = 3.0;  // weighted-norm exponent for the nonlocal path
  std::vector<double> delta_schedule = {0.1, 0.05, 0.025};
  double theta = 0.5;  // damping of the Picard update
  double fp_tolerance = 1e-8;
  int max_iterations = 200;
  double holder_alpha = 0.5;
  std::size_t x0 = 0;

  std::vector<double> lambda_schedule = {1e-1, 1e-2, 1e-3, 1e-4};
  double newton_tol = 1e-12;
  double rho_cross_tol = 1e-4;

  void validate() const;
  void validate_gamma() const;  // the nonlocal-path admissibility interval
};

struct MFGSolution {
  GridField u;
  double rho = 0.0;
  Density m;
  int iterations = 0;
  std::vector<double> fp_residual_trace;

  struct DeltaEntry {
    double delta = 0.0;
    double rho = 0.0;
    int iterations = 0;
    double fp_residual = 0.0;
  };
  std::vector<DeltaEntry> delta_trace;

  double norm_ceiling = 0.0;         // max over iterates of the active norm of m
  double contraction_estimate = 0.0; // median residual ratio after burn-in
  std::optional<CertificateReport> certificate;  // tightness at C = q/(q-1)

  const Coupling* coupling = nullptr;
  double q = 0.0;
  std::size_t x0 = 0;
};

/// Damped Picard iteration on the whole-domain map
/// m -> KFP(drift(HJB(F(.;m)))) in the boundary-weighted norm (nonlocal
/// couplings).
MFGSolution solve_nonlocal(const MFGConfig& config);
MFGSolution solve_nonlocal(const MFGConfig& config, const Density& m0);

/// One member of the local-coupling approximation: HJB on the whole domain
/// against the extended density, no-flux KFP on Omega_delta; fixed point in
/// the discrete Holder norm on Omega_delta.
MFGSolution solve_local_delta(const MFGConfig& config, double delta);
MFGSolution solve_local_delta(const MFGConfig& config, double delta, const Density& m0);

/// Runs the delta schedule with warm starts and verifies the continuation
/// limit: rho, u (max-norm on Omega_{0.1}) and m (L1) must be Cauchy. The
/// finest member is stamped as the whole-domain solution. The two-argument
/// form seeds the first stage with the given density.
MFGSolution solve_local(const MFGConfig& config);
MFGSolution solve_local(const MFGConfig& config, const Density& m0_first);

/// Smooth cutoff psi: 0 on [0,1], quintic rise on [1,2], 1 beyond.
struct CutoffProfile {
  std::function<double(double)> value, d1, d2;
  double sup_d1 = 0.0, sup_d2 = 0.0;
};
CutoffProfile quintic_cutoff();

/// Every term of the two-solution energy identity with the localization
/// phi = psi(d/delta). Monotone couplings force monotone_term >= 0 and the
/// convexity brackets <= 0; the remainders vanish as delta -> 0.
struct IdentityReport {
  double delta = 0.0;
  double monotone_term = 0.0;
  double convexity_1 = 0.0;
  double convexity_2 = 0.0;
  double rho_term = 0.0;
  double dphi_remainder = 0.0;
  double lapphi_remainder = 0.0;
  double bound_dphi = 0.0;    // weighted band integral dominating the Dphi term
  double bound_lapphi = 0.0;  // same for the Lap(phi) term
  double c1 = 0.0;            // sup |psi'| ||Dd||_inf
  double max_dphi_delta = 0.0;  // node-wise max of |Dphi| * delta, must be <= c1
};

IdentityReport uniqueness_diagnostic(const MFGSolution& a, const MFGSolution& b, double delta);
IdentityReport uniqueness_diagnostic(const MFGSolution& a, const MFGSolution& b, double delta,
                                     const CutoffProfile& psi);

/// Discrete Holder norm: sup plus the seminorm over node pairs within the
/// given reach.
double holder_norm_local(const GridField& f, double alpha, double delta, double reach = 0.25);

}  // namespace ergmfg
