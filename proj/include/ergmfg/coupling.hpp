#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ergmfg/domain.hpp"
#include "ergmfg/kfp.hpp"

namespace ergmfg {

enum class CouplingKind { NonlocalKernel, LocalFunction };

/// Interaction term F(x; m): either a smoothing kernel applied to the measure
/// or a bounded scalar function applied to the density value node-wise.
/// Immutable; evaluation is pure.
class Coupling {
 public:
  /// Nonlocal kind: Gaussian kernel, symmetric mass normalization near the
  /// boundary so the quadratic form stays positive semidefinite.
  static Coupling gaussian_kernel(const Domain& dom, double bandwidth, bool monotone = true);

  /// Local kind from a named profile: tanh | atan | neg_tanh.
  static Coupling local(const Domain& dom, const std::string& name);

  /// Local kind from a tabulated map (piecewise-linear, clamped ends).
  static Coupling local_table(const Domain& dom, std::vector<std::pair<double, double>> table,
                              bool monotone);

  CouplingKind kind() const { return kind_; }
  bool monotone() const { return monotone_; }
  double bound() const { return bound_; }
  /// (F1) modulus: ||F(m1)-F(m2)||_inf <= lipschitz * ||m1-m2||_L1.
  double lipschitz() const { return lipschitz_; }
  double holder_alpha() const { return holder_alpha_; }
  void set_holder_alpha(double a) { holder_alpha_ = a; }

  /// F(x; m) on the whole domain. A density supported on a proper subdomain
  /// is first extended by the modulus-preserving inf-convolution.
  GridField evaluate(const Density& m) const;

  /// integral of (F(m1)-F(m2))(m1-m2); non-negative for monotone couplings.
  double monotonicity_probe(const Density& m1, const Density& m2) const;

  const std::string& name() const { return name_; }

 private:
  Coupling() = default;

  CouplingKind kind_ = CouplingKind::LocalFunction;
  const Domain* dom_ = nullptr;
  bool monotone_ = false;
  double bound_ = 0.0;
  double lipschitz_ = 0.0;
  double holder_alpha_ = 0.5;  // extension modulus for subdomain densities
  std::string name_;

  std::function<double(double)> f_;       // local kind
  std::vector<double> kernel_;            // nonlocal kind, row-major n x n
};

}  // namespace ergmfg
