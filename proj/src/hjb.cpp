#include "ergmfg/hjb.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "ergmfg/errors.hpp"

namespace ergmfg {

double profile_prefactor(double q) {
  if (q >= 2.0) return 1.0;
  return std::pow(q - 1.0, (q - 2.0) / (q - 1.0)) / (2.0 - q);
}

double gradient_limit_constant(double q) { return std::pow(q - 1.0, -1.0 / (q - 1.0)); }

double drift_limit_constant(double q) { return q / (q - 1.0); }

double explosive_profile(double q, double t) {
  if (q >= 2.0) return -std::log(t);
  return profile_prefactor(q) * std::pow(t, (q - 2.0) / (q - 1.0));
}

void HJBProblem::validate() const {
  if (dom == nullptr) throw ConfigError("hjb: no domain attached");
  if (!(q > 1.0 && q <= 2.0)) throw ConfigError("hjb: q must lie in (1,2]");
  if (x0 >= dom->size() || !(dom->boundary_distance(x0) > dom->epsilon0()))
    throw ConfigError("hjb: normalization node x0 must lie inside Omega_eps0");
  if (g.v.size() != dom->size()) throw ConfigError("hjb: rhs field does not match the domain");
  for (double gv : g.v)
    if (!std::isfinite(gv)) throw ConfigError("hjb: rhs must be bounded (finite at every node)");
  for (double lam : lambda_schedule)
    if (!(lam > 0.0)) throw ConfigError("hjb: lambda schedule entries must be positive");
}

namespace {

// Hamiltonian discretization. The diffusion term keeps centered slopes
// monotone while the mesh Peclet number q|Du|^{q-1} h stays below 2, which
// holds everywhere except a band of one or two cells against the boundary
// layer; there the Godunov upwind value takes over. The two branches are
// blended with a continuous ramp in the Peclet number so the residual stays
// continuous across the switch.
struct NodeSlopes {
  double cen[2] = {0.0, 0.0};   // signed centered slopes
  double up[2] = {0.0, 0.0};    // non-negative upwind slopes
  int up_dir[2] = {-1, -1};     // active upwind neighbor: 0 minus, 1 plus
  double s2_cen = 0.0, s2_up = 0.0;
  double w = 0.0;               // 0 = centered, 1 = upwind
};

NodeSlopes node_slopes(const Domain& dom, const GridField& u, std::size_t i, double q) {
  const double h = dom.h();
  NodeSlopes out;
  double worst2 = 0.0;
  for (int a = 0; a < dom.dim(); ++a) {
    const int jm = dom.neighbor(i, a, 0);
    const int jp = dom.neighbor(i, a, 1);
    const double back = (u.v[i] - u.v[jm]) / h;
    const double fwd = (u.v[i] - u.v[jp]) / h;
    out.cen[a] = (u.v[jp] - u.v[jm]) / (2.0 * h);
    if (back >= fwd) {
      if (back > 0.0) {
        out.up[a] = back;
        out.up_dir[a] = 0;
      }
    } else if (fwd > 0.0) {
      out.up[a] = fwd;
      out.up_dir[a] = 1;
    }
    const double m = std::max({std::abs(back), std::abs(fwd), std::abs(out.cen[a])});
    worst2 += m * m;
    out.s2_cen += out.cen[a] * out.cen[a];
    out.s2_up += out.up[a] * out.up[a];
  }
  const double peclet = q * std::pow(worst2, 0.5 * (q - 1.0)) * h;
  out.w = std::clamp((peclet - 1.2) / 0.6, 0.0, 1.0);
  return out;
}

double hamiltonian_of(const NodeSlopes& sl, double q) {
  const double h_cen = std::pow(sl.s2_cen, 0.5 * q);
  const double h_up = std::pow(sl.s2_up, 0.5 * q);
  return (1.0 - sl.w) * h_cen + sl.w * h_up;
}

double hamiltonian_at(const Domain& dom, const GridField& u, std::size_t i, double q) {
  return hamiltonian_of(node_slopes(dom, u, i, q), q);
}

double laplacian_at(const Domain& dom, const GridField& u, std::size_t i) {
  const double h2 = dom.h() * dom.h();
  double lap = 0.0;
  for (int a = 0; a < dom.dim(); ++a) {
    const int jm = dom.neighbor(i, a, 0);
    const int jp = dom.neighbor(i, a, 1);
    lap += (u.v[jp] - 2.0 * u.v[i] + u.v[jm]) / h2;
  }
  return lap;
}

// One bordered Newton solve of
//   -Lap(v) + |Dv|^q + lambda v + mu = g   on interior nodes,
//   v = boundary data                      on the outer layer,
//   v(x0) = 0,
// with unknowns (v at interior nodes, mu). Damped steps with residual
// backtracking; `v` and `mu` are taken as the initial guess and updated.
struct NewtonOutcome {
  double residual = 0.0;
  int iterations = 0;
};

NewtonOutcome newton_solve(const HJBProblem& p, double lambda, GridField& v, double& mu) {
  const Domain& dom = *p.dom;
  const double h2 = dom.h() * dom.h();
  const double q = p.q;

  std::vector<int> row_of(dom.size(), -1);
  std::vector<int> node_of;
  node_of.reserve(dom.size());
  for (std::size_t i = 0; i < dom.size(); ++i) {
    if (dom.is_interior(i)) {
      row_of[i] = static_cast<int>(node_of.size());
      node_of.push_back(static_cast<int>(i));
    }
  }
  const int n = static_cast<int>(node_of.size());
  const int mu_col = n;
  const int norm_row = n;

  auto scaled_residual = [&](const GridField& w, double m, Eigen::VectorXd* out) {
    double worst = 0.0;
    for (int r = 0; r < n; ++r) {
      const std::size_t i = node_of[r];
      const double lap = laplacian_at(dom, w, i);
      const double ham = hamiltonian_at(dom, w, i, q);
      const double res = -lap + ham + lambda * w.v[i] + m - p.g.v[i];
      const double scale = std::max({1.0, std::abs(lap), std::abs(ham), std::abs(p.g.v[i]),
                                     std::abs(lambda * w.v[i]), std::abs(m)});
      if (out) (*out)[r] = res;
      worst = std::max(worst, std::abs(res) / scale);
    }
    const double nr = w.v[p.x0];
    if (out) (*out)[norm_row] = nr;
    worst = std::max(worst, std::abs(nr));
    return worst;
  };

  Eigen::VectorXd residual(n + 1);
  double rnorm = scaled_residual(v, mu, &residual);

  NewtonOutcome out;
  std::vector<Eigen::Triplet<double>> trip;
  GridField trial = v;
  bool floor_reached = false;

  for (out.iterations = 0; out.iterations < p.max_newton_iter; ++out.iterations) {
    if (rnorm < p.newton_tol) break;

    trip.clear();
    for (int r = 0; r < n; ++r) {
      const std::size_t i = node_of[r];
      double diag = lambda + 2.0 * dom.dim() / h2;

      // The blend weight is lagged: the ramp keeps the residual continuous,
      // the Jacobian treats w as frozen at the current iterate.
      const NodeSlopes sl = node_slopes(dom, v, i, q);
      const double base_cen =
          (sl.s2_cen > 1e-280) ? q * std::pow(sl.s2_cen, 0.5 * q - 1.0) : 0.0;
      const double base_up = (sl.s2_up > 1e-280) ? q * std::pow(sl.s2_up, 0.5 * q - 1.0) : 0.0;

      for (int a = 0; a < dom.dim(); ++a) {
        const double ds_cen = (1.0 - sl.w) * base_cen * sl.cen[a];
        const double ds_up = sl.w * base_up * sl.up[a];
        for (int dir = 0; dir < 2; ++dir) {
          const int j = dom.neighbor(i, a, dir);
          double coef = -1.0 / h2;
          coef += (dir == 1 ? ds_cen : -ds_cen) / (2.0 * dom.h());
          if (sl.up_dir[a] == dir) coef += -ds_up / dom.h();
          if (row_of[j] >= 0) trip.emplace_back(r, row_of[j], coef);
        }
        if (sl.up_dir[a] >= 0) diag += ds_up / dom.h();
      }
      trip.emplace_back(r, r, diag);
      trip.emplace_back(r, mu_col, 1.0);
    }
    trip.emplace_back(norm_row, row_of[p.x0], 1.0);

    Eigen::SparseMatrix<double> J(n + 1, n + 1);
    J.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(J);
    if (lu.info() != Eigen::Success)
      throw SolverError("hjb: Newton Jacobian factorization failed", rnorm);
    const Eigen::VectorXd step = lu.solve(-residual);

    double s = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 45; ++bt) {
      for (int r = 0; r < n; ++r) trial.v[node_of[r]] = v.v[node_of[r]] + s * step[r];
      const double mu_trial = mu + s * step[mu_col];
      const double rtrial = scaled_residual(trial, mu_trial, nullptr);
      if (rtrial < rnorm) {
        v.v.swap(trial.v);
        mu = mu_trial;
        rnorm = scaled_residual(v, mu, &residual);
        accepted = true;
        break;
      }
      s *= 0.5;
    }
    if (!accepted) {
      if (rnorm <= 1e-10) {  // roundoff floor; still well under the residual gate
        floor_reached = true;
        break;
      }
      throw SolverError("hjb: Newton stalled (no descent along the damped step), residual " +
                        std::to_string(rnorm), rnorm);
    }
  }
  if (rnorm >= p.newton_tol && !floor_reached)
    throw SolverError("hjb: Newton did not converge within " +
                      std::to_string(p.max_newton_iter) + " iterations, residual " +
                      std::to_string(rnorm), rnorm);
  out.residual = rnorm;
  return out;
}

// Discrete blow-up profile on the half line: the scheme-consistent analogue
// of the continuum profile. Nodes sit at distances (k+1/2)h; the two
// outermost nodes are pinned to the continuum values (the scheme resolves
// the profile there), and the leading-order balance -Lap U + |DU|^q = 0 is
// solved inward. Imposing the continuum value directly at the unresolved
// wall cell seeds a spurious d^{-(C-1)} mode of size O(h) that pollutes the
// near-boundary asymptotics; the discrete profile removes it.
std::vector<double> discrete_wall_profile(double q, double h, int levels) {
  const int n = std::max(levels, 10);
  std::vector<double> u(n);
  for (int k = 0; k < n; ++k) u[k] = explosive_profile(q, (k + 0.5) * h);

  // The same blended Hamiltonian, restricted to one axis.
  auto ham = [&](double um, double uc, double up) {
    const double back = (uc - um) / h;
    const double fwd = (uc - up) / h;
    const double cen = (up - um) / (2.0 * h);
    const double m = std::max({std::abs(back), std::abs(fwd), std::abs(cen)});
    const double w = std::clamp((q * std::pow(m, q - 1.0) * h - 1.2) / 0.6, 0.0, 1.0);
    const double s_up = std::max({back, fwd, 0.0});
    return (1.0 - w) * std::pow(std::abs(cen), q) + w * std::pow(s_up, q);
  };

  // Shoot inward: the stencil equation at node k pins u_{k-1} given the two
  // outer values. The residual is strictly decreasing in u_{k-1} (through
  // -Lap and the Peclet-bounded slope term), so bisection is safe.
  for (int k = n - 3; k >= 1; --k) {
    auto residual = [&](double um) {
      return -(u[k + 1] - 2.0 * u[k] + um) / (h * h) + ham(um, u[k], u[k + 1]);
    };
    double lo = u[k];                   // profile increases towards the wall
    double span = std::max(1.0, u[k]);  // find a bracket with residual < 0
    double hi = lo + span;
    for (int grow = 0; grow < 200 && residual(hi) > 0.0; ++grow) {
      span *= 2.0;
      hi = lo + span;
    }
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (residual(mid) > 0.0)
        lo = mid;
      else
        hi = mid;
    }
    u[k - 1] = 0.5 * (lo + hi);
  }
  return u;
}

// Scheme-consistent blow-up profile sampled on the whole grid (unshifted).
GridField profile_field(const HJBProblem& p) {
  const Domain& dom = *p.dom;
  GridField prof(dom);
  const double h = dom.h();
  const int levels = std::max(10, static_cast<int>(std::floor(dom.epsilon0() / h)));
  const std::vector<double> wall = discrete_wall_profile(p.q, h, levels);

  auto profile_at = [&](double dist) {
    const double k = dist / h - 0.5;
    if (k >= static_cast<double>(wall.size() - 1))
      return explosive_profile(p.q, dist);
    const int k0 = std::max(0, static_cast<int>(std::floor(k)));
    const int k1 = std::min<int>(k0 + 1, wall.size() - 1);
    const double w = std::clamp(k - k0, 0.0, 1.0);
    return (1.0 - w) * wall[k0] + w * wall[k1];
  };

  const double floor_d = h / 4.0;
  for (std::size_t i = 0; i < dom.size(); ++i)
    prof.v[i] = profile_at(std::max(dom.boundary_distance(i), floor_d));
  return prof;
}

// Layer data plus the profile-shaped initial guess, normalized at x0.
GridField initial_guess(const HJBProblem& p, const GridField& profile) {
  const Domain& dom = *p.dom;
  GridField v = profile;
  if (p.boundary_layer == BoundaryLayer::LargeConstant) {
    const double big = 10.0 * explosive_profile(p.q, dom.h() / 2.0);
    for (std::size_t i = 0; i < dom.size(); ++i)
      if (!dom.is_interior(i)) v.v[i] = big;
  }
  const double shift = v.v[p.x0];
  for (std::size_t i = 0; i < dom.size(); ++i)
    if (dom.is_interior(i)) v.v[i] -= shift;
  return v;
}

void check_blowup_monotone(const Domain& dom, const GridField& u) {
  for (std::size_t i = 0; i < dom.size(); ++i) {
    if (dom.is_interior(i)) continue;
    for (int a = 0; a < dom.dim(); ++a) {
      for (int dir = 0; dir < 2; ++dir) {
        const int j = dom.neighbor(i, a, dir);
        if (j >= 0 && dom.is_interior(j) && !(u.v[i] > u.v[j]))
          throw SolverError("hjb: value fails to increase towards the boundary layer",
                            u.v[j] - u.v[i]);
      }
    }
  }
}

}  // namespace

GridField solve_discounted(const HJBProblem& p, double lambda) {
  p.validate();
  if (!(lambda > 0.0)) throw ConfigError("solve_discounted: lambda must be positive");
  GridField v = initial_guess(p, profile_field(p));
  double mu = 0.0;
  newton_solve(p, lambda, v, mu);
  GridField u = v;
  for (std::size_t i = 0; i < p.dom->size(); ++i) u.v[i] += mu / lambda;
  return u;
}

ValueSolution solve_ergodic(const HJBProblem& p) {
  p.validate();
  const Domain& dom = *p.dom;

  const GridField profile = profile_field(p);
  GridField v = initial_guess(p, profile);
  double mu = 0.0;
  ValueSolution sol;
  NewtonOutcome polish;

  // Two passes: the first solve exposes the O(1) regular part of u at the
  // boundary (the blow-up profile fixes only the leading term); adding the
  // measured offset to the layer data removes the spurious decaying mode it
  // would otherwise seed. Skipped for the deliberately crude large-constant
  // mode.
  const int passes = (p.boundary_layer == BoundaryLayer::Profile) ? 2 : 1;
  for (int pass = 0; pass < passes; ++pass) {
    if (pass > 0) {
      const double lo = std::max(0.03, 6.5 * dom.h());
      const double hi = lo + 0.035;
      double acc = 0.0;
      int count = 0;
      for (std::size_t i = 0; i < dom.size(); ++i) {
        const double d = dom.boundary_distance(i);
        if (dom.is_interior(i) && d >= lo && d <= hi) {
          acc += v.v[i] - profile.v[i];
          ++count;
        }
      }
      if (count == 0) break;
      const double offset = acc / count;
      for (std::size_t i = 0; i < dom.size(); ++i)
        if (!dom.is_interior(i)) v.v[i] = profile.v[i] + offset;
    }
    sol.lambda_trace.clear();
    for (double lam : p.lambda_schedule) {
      newton_solve(p, lam, v, mu);
      sol.lambda_trace.emplace_back(lam, mu);
    }
    polish = newton_solve(p, 0.0, v, mu);
  }

  const std::size_t nt = sol.lambda_trace.size();
  if (nt >= 2) {
    const auto [la, ma] = sol.lambda_trace[nt - 2];
    const auto [lb, mb] = sol.lambda_trace[nt - 1];
    sol.rho_extrapolated = mb + (mb - ma) * lb / (la - lb);
  } else if (nt == 1) {
    sol.rho_extrapolated = sol.lambda_trace[0].second;
  }
  if (nt == 0) sol.rho_extrapolated = mu;

  if (nt > 0 && std::abs(sol.rho_extrapolated - mu) > p.rho_cross_tol)
    throw DiagnosticError(
        "hjb: vanishing-discount extrapolation and the direct ergodic solve disagree on rho (" +
        std::to_string(sol.rho_extrapolated) + " vs " + std::to_string(mu) +
        "); boundary-layer pollution suspected, refine the grid");

  // Pin the normalization exactly; the ergodic equation is shift invariant.
  const double shift = v.v[p.x0];
  for (std::size_t i = 0; i < dom.size(); ++i) v.v[i] -= shift;

  check_blowup_monotone(dom, v);

  sol.u = v;
  sol.rho = mu;
  sol.q = p.q;
  sol.x0 = p.x0;
  sol.residual_norm = polish.residual;
  return sol;
}

VectorGridField centered_gradient(const Domain& dom, const GridField& u) {
  VectorGridField g(dom, dom.h());
  for (std::size_t i = 0; i < dom.size(); ++i) {
    if (!dom.is_interior(i)) continue;
    const double gx =
        (u.v[dom.neighbor(i, 0, 1)] - u.v[dom.neighbor(i, 0, 0)]) / (2.0 * dom.h());
    g.vx[i] = gx;
    if (dom.dim() == 2)
      g.vy[i] = (u.v[dom.neighbor(i, 1, 1)] - u.v[dom.neighbor(i, 1, 0)]) / (2.0 * dom.h());
  }
  return g;
}

DriftField drift_from_value(const ValueSolution& sol) {
  const Domain& dom = *sol.u.dom;
  DriftField drift;
  drift.q = sol.q;
  drift.b = centered_gradient(dom, sol.u);
  for (std::size_t i = 0; i < dom.size(); ++i) {
    const Vec2 du = drift.b.at(i);
    const double mag = du.norm();
    if (mag < 1e-12) {  // p -> q|p|^{q-2}p extends by 0 at p = 0 for q > 1
      drift.b.vx[i] = 0.0;
      drift.b.vy[i] = 0.0;
      continue;
    }
    const double factor = sol.q * std::pow(mag, sol.q - 2.0);
    drift.b.vx[i] *= factor;
    drift.b.vy[i] *= factor;
  }
  return drift;
}

double hjb_residual(const Domain& dom, const GridField& u, double q, const GridField& g,
                    double lambda, double rho, double delta) {
  double worst = 0.0;
  for (std::size_t i = 0; i < dom.size(); ++i) {
    if (!dom.is_interior(i) || !dom.in_mask(i, delta)) continue;
    const double lap = laplacian_at(dom, u, i);
    const double ham = hamiltonian_at(dom, u, i, q);
    const double res = -lap + ham + lambda * u.v[i] + rho - g.v[i];
    const double scale = std::max({1.0, std::abs(lap), std::abs(ham), std::abs(g.v[i]),
                                   std::abs(lambda * u.v[i]), std::abs(rho)});
    worst = std::max(worst, std::abs(res) / scale);
  }
  return worst;
}

double numerical_hamiltonian(const Domain& dom, const GridField& u, std::size_t i, double q) {
  return hamiltonian_at(dom, u, i, q);
}

namespace {

struct LinFit {
  double slope = 0.0, intercept = 0.0;
};

LinFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double det = n * sxx - sx * sx;
  if (std::abs(det) < 1e-14 * std::max(1.0, sxx * n))
    throw Error("asymptotics fit: bands are too clustered (singular normal equations)");
  return {(n * sxy - sx * sy) / det, (sxx * sy - sx * sxy) / det};
}

}  // namespace

AsymptoticsReport fit_boundary_asymptotics(const ValueSolution& sol) {
  const Domain& dom = *sol.u.dom;
  const double h = dom.h();
  const double eps0 = dom.epsilon0();
  FitWindow w;
  w.u_lo = 3.5 * h;  // the 3 outermost node bands are scheme polluted
  w.u_hi = std::max(std::min(eps0 / 2.0, 0.025), w.u_lo + 8.0 * h);
  w.grad_lo = std::max(8.0 * h, 0.012);
  w.grad_hi = std::max(eps0 / 2.0, w.grad_lo + 8.0 * h);
  return fit_boundary_asymptotics(sol, w);
}

AsymptoticsReport fit_boundary_asymptotics(const ValueSolution& sol, const FitWindow& window) {
  const Domain& dom = *sol.u.dom;
  const double h = dom.h();
  const double q = sol.q;
  const DriftField drift = drift_from_value(sol);
  const VectorGridField du = centered_gradient(dom, sol.u);

  std::map<int, AsymptoticsBand> bands;
  for (std::size_t i = 0; i < dom.size(); ++i) {
    if (!dom.is_interior(i)) continue;
    const double d = dom.boundary_distance(i);
    if (!(d < dom.epsilon0())) continue;
    auto& band = bands[static_cast<int>(std::floor(d / h))];
    band.d += d;
    band.u_mean += sol.u.v[i];
    band.grad_scaled += du.at(i).dot(dom.nu(i)) * std::pow(d, 1.0 / (q - 1.0));
    band.drift_scaled += drift.b.at(i).dot(dom.nu(i)) * d;
    band.count += 1;
  }

  AsymptoticsReport rep;
  rep.window = window;
  int usable = 0;
  for (auto& [k, band] : bands) {
    band.d /= band.count;
    band.u_mean /= band.count;
    band.grad_scaled /= band.count;
    band.drift_scaled /= band.count;
    band.ratio = band.u_mean / explosive_profile(q, band.d);
    rep.bands.push_back(band);
    if (band.d >= 2.0 * h && band.d <= dom.epsilon0() / 2.0) ++usable;
  }
  if (usable < 6)
    throw Error("fit_boundary_asymptotics: fewer than 6 node bands between 2h and eps0/2");

  // The value fit separates the singular profile from its additive regular
  // part: u ~ C phi(d) + K with phi = d^{(q-2)/(q-1)} (or -log d at q = 2),
  // regressed over the whole usable range. The power-law exponent is then
  // read from the offset-corrected values on the near bands, where the
  // leading term dominates.
  {
    std::vector<double> phi, uval;
    for (const auto& band : rep.bands) {
      if (band.d < window.u_lo || band.d > dom.epsilon0() / 2.0) continue;
      phi.push_back(q < 2.0 ? std::pow(band.d, (q - 2.0) / (q - 1.0)) : -std::log(band.d));
      uval.push_back(band.u_mean);
    }
    if (phi.size() < 4) throw Error("fit_boundary_asymptotics: value-fit window has < 4 bands");
    const LinFit cf = least_squares(phi, uval);
    rep.prefactor_fit = cf.slope;
    rep.log_slope = (q < 2.0) ? 0.0 : cf.slope;

    if (q < 2.0) {
      std::vector<double> logd, logu;
      for (const auto& band : rep.bands) {
        if (band.d < window.u_lo || band.d > window.u_hi) continue;
        const double corrected = band.u_mean - cf.intercept;
        if (!(corrected > 0.0)) continue;
        logd.push_back(std::log(band.d));
        logu.push_back(std::log(corrected));
      }
      if (logd.size() < 4)
        throw Error("fit_boundary_asymptotics: exponent-fit window has < 4 bands");
      rep.exponent_fit = least_squares(logd, logu).slope;
    } else {
      rep.exponent_fit = 0.0;
    }
  }

  std::vector<double> dg, grads, drifts;
  for (const auto& band : rep.bands) {
    if (band.d < window.grad_lo || band.d > window.grad_hi) continue;
    dg.push_back(band.d);
    grads.push_back(band.grad_scaled);
    drifts.push_back(band.drift_scaled);
  }
  if (dg.size() < 3) throw Error("fit_boundary_asymptotics: gradient-fit window has < 3 bands");
  rep.gradient_limit = least_squares(dg, grads).intercept;
  rep.drift_limit = least_squares(dg, drifts).intercept;

  rep.grad_constant_sup = 0.0;
  for (std::size_t i = 0; i < dom.size(); ++i) {
    if (!dom.is_interior(i) || !dom.in_mask(i, 2.0 * h)) continue;
    rep.grad_constant_sup = std::max(
        rep.grad_constant_sup,
        du.at(i).norm() * std::pow(dom.boundary_distance(i), 1.0 / (q - 1.0)));
  }
  return rep;
}

}  // namespace ergmfg
