#pragma once

#include <cstddef>
#include <vector>

#include "ergmfg/domain.hpp"
#include "ergmfg/hjb.hpp"

namespace ergmfg {

/// Non-negative unit-mass grid measure. The support mask is
/// {boundary_distance > m.support_delta}; values outside it are zero.
struct Density {
  GridField m;
  double mass() const { return m.dom->integrate(m, m.support_delta); }
};

/// Lyapunov data V(x) = d(x)^{-C+1+epsilon} certifying tightness of the
/// stationary measure under a drift with (b.nu) d -> C > 1.
struct LyapunovSpec {
  double C = 0.0;
  double epsilon = 0.0;
  double delta_star = 0.0;  // <= 0 requests automatic selection

  void validate() const;
};

struct CertificateBand {
  double delta = 0.0;
  double integral = 0.0;  // integral over Omega_delta of |Lap V - b.DV| m
};

struct CertificateReport {
  double S = 0.0;           // integral over Omega_{delta_star}
  double delta_star = 0.0;
  std::vector<CertificateBand> band_table;
  bool pass = false;
  double tolerance = 0.0;   // slack admitted on top of 2S
  double weighted_norm = 0.0;  // integral of d^{-C-1+eps} m
  double exponent = 0.0;       // -C-1+eps
};

struct WeightedNormBand {
  double d_upper = 0.0;
  double sum = 0.0;
};

struct WeightedNormResult {
  double value = 0.0;
  bool divergent = false;
  std::vector<WeightedNormBand> bands;  // dyadic partial sums, coarse to fine
};

/// Per-band values of (b.nu) d with a linear extrapolation towards d = 0.
struct DriftConstantEstimate {
  double C = 0.0;
  std::vector<std::pair<double, double>> bands;  // (d, (b.nu) d)
};

DriftConstantEstimate estimate_drift_constant(const DriftField& b);

/// Stationary measure of the no-flux problem on Omega_delta: the positive
/// unit-mass null vector of the conservative exponential-fitting operator.
Density solve_kfp_neumann(const DriftField& b, double delta);

struct KfpContinuationTrace {
  std::vector<double> deltas;
  std::vector<double> l1_diffs;  // successive L1 distances, zero-extended
};

/// Whole-domain stationary measure as the limit of the Neumann continuation;
/// requires the inward-blowup diagnostic (b.nu) d -> C > 1 and a decreasing
/// L1 Cauchy sequence across the continuation members.
Density solve_kfp_whole(const DriftField& b, const std::vector<double>& continuation,
                        KfpContinuationTrace* trace = nullptr);

/// Default continuation schedule: dyadic from 0.1 down to 2h.
std::vector<double> default_continuation(const Domain& dom, double first = 0.1);

/// Boundary-weighted norm  integral of d^{-gamma} |m|  using the exact
/// boundary distance, with a dyadic ratio test flagging divergence.
WeightedNormResult weighted_norm(const Density& m, double gamma);

CertificateReport lyapunov_certificate(const DriftField& b, const Density& m,
                                       const LyapunovSpec& spec);

double harnack_ratio(const Density& m, double delta);

/// Compactly supported C2 test function A (1 - |x-c|^2/r^2)^3 on |x-c| < r.
struct BumpTestFunction {
  Vec2 center;
  double radius = 0.1;
  double amplitude = 1.0;
  int dim = 1;

  double value(const Vec2& p) const;
  Vec2 grad(const Vec2& p) const;
  double laplacian(const Vec2& p) const;
};

/// Distributional residual  integral of (Lap(phi) - b.D(phi)) m  for one test
/// function; the bump support must stay inside Omega_{2h}.
double weak_residual(const Density& m, const DriftField& b, const BumpTestFunction& phi);

/// Sparse operator in triplet form (square, over the mask's nodes in mask
/// order). Exposed so the adjoint-consistency between the divergence-form
/// operator and the advection operator can be checked entry-exactly.
struct SparseOperator {
  int n = 0;
  std::vector<int> rows, cols;
  std::vector<double> vals;
  std::vector<int> node_of;  // mask order -> domain node index
};

/// Divergence-form operator m -> div(Dm + m b) with no-flux closure.
SparseOperator assemble_kfp_operator(const DriftField& b, double delta);
/// Its formal adjoint v -> Lap v - b.Dv in the same exponential-fitting
/// discretization.
SparseOperator assemble_advection_operator(const DriftField& b, double delta);

}  // namespace ergmfg
