#include "ergmfg/mfg.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "ergmfg/errors.hpp"

namespace ergmfg {

void MFGConfig::validate() const {
  if (dom == nullptr) throw ConfigError("mfg: no domain attached");
  if (coupling == nullptr) throw ConfigError("mfg: no coupling attached");
  if (!(q > 1.0 && q <= 2.0)) throw ConfigError("mfg: q must lie in (1,2]");
  if (!(theta > 0.0 && theta <= 1.0)) throw ConfigError("mfg: damping theta must lie in (0,1]");
  if (!(fp_tolerance > 0.0)) throw ConfigError("mfg: fp_tolerance must be positive");
  if (max_iterations < 1) throw ConfigError("mfg: max_iterations must be at least 1");
  if (!(holder_alpha > 0.0 && holder_alpha <= 1.0))
    throw ConfigError("mfg: holder_alpha must lie in (0,1]");
  if (delta_schedule.empty()) throw ConfigError("mfg: empty delta schedule");
  for (std::size_t k = 1; k < delta_schedule.size(); ++k)
    if (!(delta_schedule[k] < delta_schedule[k - 1]))
      throw ConfigError("mfg: delta schedule must decrease strictly");
  if (!(delta_schedule.back() >= 2.0 * dom->h()))
    throw ConfigError("mfg: delta schedule must stay at or above 2h");
}

void MFGConfig::validate_gamma() const {
  const double hi = (2.0 * q - 1.0) / (q - 1.0);
  if (!(gamma > 2.0 && gamma < hi)) {
    std::ostringstream msg;
    msg << "mfg: gamma = " << gamma << " outside the admissible interval (2, " << hi
        << ") for q = " << q;
    throw ConfigError(msg.str());
  }
}

namespace {

Density uniform_density(const Domain& dom, double delta) {
  Density m;
  m.m = GridField(dom, 0.0, delta);
  m.m.support_delta = delta;
  const double val = 1.0 / dom.mask_volume(delta);
  for (std::size_t i = 0; i < dom.size(); ++i)
    if (dom.in_mask(i, delta)) m.m.v[i] = val;
  return m;
}

double w_gamma_norm(const Domain& dom, const std::vector<double>& v, double gamma) {
  double s = 0.0;
  for (std::size_t i = 0; i < dom.size(); ++i)
    s += std::pow(dom.boundary_distance(i), -gamma) * std::abs(v[i]);
  return s * dom.cell_volume();
}

HJBProblem make_problem(const MFGConfig& cfg, GridField g) {
  HJBProblem p;
  p.q = cfg.q;
  p.dom = cfg.dom;
  p.g = std::move(g);
  p.x0 = cfg.x0 ? cfg.x0 : cfg.dom->center_node();
  p.lambda_schedule = cfg.lambda_schedule;
  p.newton_tol = cfg.newton_tol;
  p.rho_cross_tol = cfg.rho_cross_tol;
  return p;
}

double median_ratio(const std::vector<double>& trace) {
  std::vector<double> ratios;
  for (std::size_t k = 6; k < trace.size(); ++k)
    if (trace[k - 1] > 0.0) ratios.push_back(trace[k] / trace[k - 1]);
  if (ratios.empty()) return 0.0;
  std::nth_element(ratios.begin(), ratios.begin() + ratios.size() / 2, ratios.end());
  return ratios[ratios.size() / 2];
}

CertificateReport tightness_certificate(const MFGConfig& cfg, const DriftField& b,
                                        const Density& m) {
  LyapunovSpec spec;
  spec.C = drift_limit_constant(cfg.q);
  spec.epsilon = 0.5 * (spec.C - 1.0);
  return lyapunov_certificate(b, m, spec);
}

}  // namespace

MFGSolution solve_nonlocal(const MFGConfig& config) {
  return solve_nonlocal(config, uniform_density(*config.dom, 0.0));
}

MFGSolution solve_nonlocal(const MFGConfig& config, const Density& m0) {
  config.validate();
  config.validate_gamma();
  if (config.coupling->kind() != CouplingKind::NonlocalKernel)
    throw ConfigError("solve_nonlocal: coupling must be of the nonlocal kind");
  const Domain& dom = *config.dom;
  const std::vector<double> continuation = default_continuation(dom, config.delta_schedule[0]);

  MFGSolution sol;
  sol.coupling = config.coupling;
  sol.q = config.q;
  Density m = m0;
  ValueSolution value;
  DriftField drift;

  for (int it = 0; it < config.max_iterations; ++it) {
    value = solve_ergodic(make_problem(config, config.coupling->evaluate(m)));
    drift = drift_from_value(value);
    const Density mT = solve_kfp_whole(drift, continuation);

    std::vector<double> diff(dom.size());
    Density next;
    next.m = GridField(dom, 0.0, 0.0);
    for (std::size_t i = 0; i < dom.size(); ++i) {
      next.m.v[i] = (1.0 - config.theta) * m.m.v[i] + config.theta * mT.m.v[i];
      diff[i] = next.m.v[i] - m.m.v[i];
    }
    const double res = w_gamma_norm(dom, diff, config.gamma);
    sol.fp_residual_trace.push_back(res);
    sol.norm_ceiling = std::max(sol.norm_ceiling, w_gamma_norm(dom, next.m.v, config.gamma));
    m = next;
    sol.iterations = it + 1;
    if (res < config.fp_tolerance) break;
  }
  if (sol.fp_residual_trace.empty() || sol.fp_residual_trace.back() >= config.fp_tolerance)
    throw SolverError("solve_nonlocal: Picard iteration did not reach tolerance within " +
                          std::to_string(config.max_iterations) + " iterations",
                      sol.fp_residual_trace.empty() ? 1.0 : sol.fp_residual_trace.back());

  value = solve_ergodic(make_problem(config, config.coupling->evaluate(m)));
  drift = drift_from_value(value);
  sol.u = value.u;
  sol.rho = value.rho;
  sol.m = m;
  sol.x0 = value.x0;
  sol.contraction_estimate = median_ratio(sol.fp_residual_trace);
  sol.certificate = tightness_certificate(config, drift, m);
  return sol;
}

MFGSolution solve_local_delta(const MFGConfig& config, double delta) {
  return solve_local_delta(config, delta, uniform_density(*config.dom, delta));
}

MFGSolution solve_local_delta(const MFGConfig& config, double delta, const Density& m0) {
  config.validate();
  if (config.coupling->kind() != CouplingKind::LocalFunction)
    throw ConfigError("solve_local_delta: coupling must be of the local kind");
  const Domain& dom = *config.dom;

  MFGSolution sol;
  sol.coupling = config.coupling;
  sol.q = config.q;
  Density m = m0;
  ValueSolution value;

  for (int it = 0; it < config.max_iterations; ++it) {
    value = solve_ergodic(make_problem(config, config.coupling->evaluate(m)));
    const DriftField drift = drift_from_value(value);
    const Density mT = solve_kfp_neumann(drift, delta);

    GridField diff(dom, 0.0, delta);
    diff.support_delta = delta;
    Density next;
    next.m = GridField(dom, 0.0, delta);
    next.m.support_delta = delta;
    for (std::size_t i = 0; i < dom.size(); ++i) {
      if (!dom.in_mask(i, delta)) continue;
      next.m.v[i] = (1.0 - config.theta) * m.m.v[i] + config.theta * mT.m.v[i];
      diff.v[i] = next.m.v[i] - m.m.v[i];
    }
    const double res = holder_norm_local(diff, config.holder_alpha, delta);
    sol.fp_residual_trace.push_back(res);
    sol.norm_ceiling =
        std::max(sol.norm_ceiling, holder_norm_local(next.m, config.holder_alpha, delta));
    m = next;
    sol.iterations = it + 1;
    if (res < config.fp_tolerance) break;
  }
  if (sol.fp_residual_trace.empty() || sol.fp_residual_trace.back() >= config.fp_tolerance)
    throw SolverError("solve_local_delta: Picard iteration did not reach tolerance within " +
                          std::to_string(config.max_iterations) + " iterations at delta = " +
                          std::to_string(delta),
                      sol.fp_residual_trace.empty() ? 1.0 : sol.fp_residual_trace.back());

  value = solve_ergodic(make_problem(config, config.coupling->evaluate(m)));
  sol.u = value.u;
  sol.rho = value.rho;
  sol.m = m;
  sol.x0 = value.x0;
  sol.contraction_estimate = median_ratio(sol.fp_residual_trace);
  return sol;
}

MFGSolution solve_local(const MFGConfig& config) {
  config.validate();
  return solve_local(config, uniform_density(*config.dom, config.delta_schedule.front()));
}

MFGSolution solve_local(const MFGConfig& config, const Density& m0_first) {
  config.validate();
  const Domain& dom = *config.dom;
  MFGSolution out;
  std::vector<double> rho_list;
  std::vector<double> u_diffs, m_diffs, rho_diffs;
  GridField u_prev;
  std::vector<double> m_prev;
  Density warm = m0_first;
  bool have_warm = false;
  bool first_stage = true;

  for (double delta : config.delta_schedule) {
    MFGSolution stage;
    if (first_stage) {
      stage = solve_local_delta(config, delta, warm);
      first_stage = false;
    } else if (have_warm) {
      // Warm start: extend the previous density to the larger mask and
      // renormalize.
      GridField ext = extend_holder(warm.m, config.holder_alpha);
      Density m0;
      m0.m = GridField(dom, 0.0, delta);
      m0.m.support_delta = delta;
      for (std::size_t i = 0; i < dom.size(); ++i)
        if (dom.in_mask(i, delta)) m0.m.v[i] = std::max(ext.v[i], 0.0);
      const double mass = m0.mass();
      if (!(mass > 0.0)) throw SolverError("solve_local: degenerate warm start", mass);
      for (double& v : m0.m.v) v /= mass;
      stage = solve_local_delta(config, delta, m0);
    }

    if (have_warm) {
      rho_diffs.push_back(std::abs(stage.rho - rho_list.back()));
      double du = 0.0;
      for (std::size_t i = 0; i < dom.size(); ++i)
        if (dom.in_mask(i, 0.1)) du = std::max(du, std::abs(stage.u.v[i] - u_prev.v[i]));
      u_diffs.push_back(du);
      double dm = 0.0;
      for (std::size_t i = 0; i < dom.size(); ++i) dm += std::abs(stage.m.m.v[i] - m_prev[i]);
      m_diffs.push_back(dm * dom.cell_volume());
    }
    rho_list.push_back(stage.rho);
    u_prev = stage.u;
    m_prev = stage.m.m.v;
    warm = stage.m;
    have_warm = true;

    out.delta_trace.push_back({delta, stage.rho, stage.iterations,
                               stage.fp_residual_trace.back()});
    out.fp_residual_trace = stage.fp_residual_trace;
    out.iterations += stage.iterations;
    out.u = stage.u;
    out.rho = stage.rho;
    out.m = stage.m;
    out.norm_ceiling = std::max(out.norm_ceiling, stage.norm_ceiling);
    out.contraction_estimate = stage.contraction_estimate;
    out.x0 = stage.x0;
  }
  out.coupling = config.coupling;
  out.q = config.q;

  auto cauchy = [](const std::vector<double>& d) {
    for (std::size_t k = 1; k < d.size(); ++k)
      if (!(d[k] < d[k - 1] + 1e-14)) return false;
    return true;
  };
  if (config.delta_schedule.size() >= 3 &&
      (!cauchy(rho_diffs) || !cauchy(u_diffs) || !cauchy(m_diffs))) {
    std::ostringstream msg;
    msg << "solve_local: continuation is not Cauchy; rho diffs:";
    for (double d : rho_diffs) msg << ' ' << d;
    msg << "; u diffs:";
    for (double d : u_diffs) msg << ' ' << d;
    msg << "; m diffs:";
    for (double d : m_diffs) msg << ' ' << d;
    throw DiagnosticError(msg.str());
  }

  // Tightness transfer at the continuation limit.
  ValueSolution value = solve_ergodic(make_problem(config, config.coupling->evaluate(out.m)));
  out.certificate = tightness_certificate(config, drift_from_value(value), out.m);

  out.m.m.support_delta = 0.0;  // stamped as the whole-domain solution
  return out;
}

CutoffProfile quintic_cutoff() {
  CutoffProfile p;
  p.value = [](double s) {
    if (s <= 1.0) return 0.0;
    if (s >= 2.0) return 1.0;
    const double t = s - 1.0;
    return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
  };
  p.d1 = [](double s) {
    if (s <= 1.0 || s >= 2.0) return 0.0;
    const double t = s - 1.0;
    return 30.0 * t * t * (1.0 - 2.0 * t + t * t);
  };
  p.d2 = [](double s) {
    if (s <= 1.0 || s >= 2.0) return 0.0;
    const double t = s - 1.0;
    return 60.0 * t * (1.0 - 3.0 * t + 2.0 * t * t);
  };
  p.sup_d1 = 15.0 / 8.0;
  p.sup_d2 = 10.0 / std::sqrt(3.0);
  return p;
}

IdentityReport uniqueness_diagnostic(const MFGSolution& a, const MFGSolution& b, double delta) {
  return uniqueness_diagnostic(a, b, delta, quintic_cutoff());
}

IdentityReport uniqueness_diagnostic(const MFGSolution& a, const MFGSolution& b, double delta,
                                     const CutoffProfile& psi) {
  if (a.u.dom != b.u.dom)
    throw ConfigError("uniqueness_diagnostic: solutions live on different grids");
  if (a.q != b.q) throw ConfigError("uniqueness_diagnostic: solutions have different q");
  if (a.coupling != b.coupling)
    throw ConfigError("uniqueness_diagnostic: solutions have different couplings");
  const Domain& dom = *a.u.dom;
  const double q = a.q;
  if (!(delta > 0.0 && 2.0 * delta <= dom.epsilon0()))
    throw ConfigError("uniqueness_diagnostic: need 0 < delta <= eps0/2");

  const GridField Fa = a.coupling->evaluate(a.m);
  const GridField Fb = b.coupling->evaluate(b.m);
  const VectorGridField dua = centered_gradient(dom, a.u);
  const VectorGridField dub = centered_gradient(dom, b.u);

  auto b_of = [q](const Vec2& p) -> Vec2 {
    const double mag = p.norm();
    if (mag < 1e-12) return {0.0, 0.0};
    const double f = q * std::pow(mag, q - 2.0);
    return {f * p.x, f * p.y};
  };

  IdentityReport rep;
  rep.delta = delta;
  rep.c1 = psi.sup_d1;  // |Dd| <= 1 for the extended distance
  const double vol = dom.cell_volume();

  for (std::size_t i = 0; i < dom.size(); ++i) {
    if (!dom.is_interior(i)) continue;
    const double d = dom.d(i);
    const double s = d / delta;
    const double phi = psi.value(s);
    const Vec2 gd = dom.grad_d(i);
    const Vec2 dphi = gd * (psi.d1(s) / delta);
    const double lapphi =
        psi.d2(s) / (delta * delta) * gd.dot(gd) + psi.d1(s) / delta * dom.laplacian_d(i);
    rep.max_dphi_delta = std::max(rep.max_dphi_delta, dphi.norm() * delta);

    const double m1 = a.m.m.v[i], m2 = b.m.m.v[i];
    const double mbar = m1 - m2;
    const double ubar = a.u.v[i] - b.u.v[i];
    const Vec2 p1 = dua.at(i), p2 = dub.at(i);
    const Vec2 b1 = b_of(p1), b2 = b_of(p2);
    const double h1 = std::pow(p1.dot(p1), 0.5 * q);
    const double h2 = std::pow(p2.dot(p2), 0.5 * q);
    const Vec2 dubar = p1 - p2;

    if (phi != 0.0) {
      rep.monotone_term += phi * (Fa.v[i] - Fb.v[i]) * mbar * vol;
      rep.convexity_1 += phi * m1 * (h1 - h2 - b1.dot(dubar)) * vol;
      rep.convexity_2 += phi * m2 * (h2 - h1 + b2.dot(dubar)) * vol;
      rep.rho_term += (a.rho - b.rho) * mbar * phi * vol;
      rep.lapphi_remainder += lapphi * ubar * mbar * vol;
    }
    if (psi.d1(s) != 0.0 || psi.d2(s) != 0.0) {
      const Vec2 flux{m1 * b1.x - m2 * b2.x, m1 * b1.y - m2 * b2.y};
      rep.dphi_remainder -= dphi.dot(flux * ubar + dubar * (2.0 * mbar)) * vol;
    }

    // Band integrals dominating the remainders ((q-2)/(q-1)-weighted).
    const double dist = dom.boundary_distance(i);
    if (dist > delta && dist <= 2.0 * delta) {
      const double weight =
          (q < 2.0) ? std::pow(dist, -q / (q - 1.0)) : -std::log(dist) / dist;
      rep.bound_dphi += weight * (m1 + m2 + std::abs(mbar)) * vol;
      rep.bound_lapphi += weight * (m1 + m2) * vol;
    }
  }
  return rep;
}

double holder_norm_local(const GridField& f, double alpha, double delta, double reach) {
  const Domain& dom = *f.dom;
  const std::vector<int> idx = dom.mask_indices(delta);
  double sup = 0.0;
  for (int i : idx) sup = std::max(sup, std::abs(f.v[i]));

  // Spatial binning keeps the pair scan at O(N * neighborhood).
  const double cell_size = reach;
  double semi = 0.0;
  if (dom.dim() == 1) {
    for (std::size_t p = 0; p < idx.size(); ++p) {
      for (std::size_t r = p + 1; r < idx.size(); ++r) {
        const double dist = (dom.coord(idx[r]) - dom.coord(idx[p])).norm();
        if (dist > reach) break;  // mask indices are ordered along the axis in 1D
        semi = std::max(semi,
                        std::abs(f.v[idx[r]] - f.v[idx[p]]) / std::pow(dist, alpha));
      }
    }
  } else {
    std::map<std::pair<int, int>, std::vector<int>> bins;
    for (int i : idx) {
      const Vec2 c = dom.coord(i);
      bins[{static_cast<int>(std::floor(c.x / cell_size)),
            static_cast<int>(std::floor(c.y / cell_size))}].push_back(i);
    }
    for (const auto& [key, members] : bins) {
      for (int dx = -1; dx <= 1; ++dx) {
        for (int dy = -1; dy <= 1; ++dy) {
          const auto it = bins.find({key.first + dx, key.second + dy});
          if (it == bins.end()) continue;
          for (int i : members) {
            for (int j : it->second) {
              if (j <= i) continue;
              const double dist = (dom.coord(i) - dom.coord(j)).norm();
              if (dist > reach || dist == 0.0) continue;
              semi = std::max(semi, std::abs(f.v[i] - f.v[j]) / std::pow(dist, alpha));
            }
          }
        }
      }
    }
  }
  return sup + semi;
}

}  // namespace ergmfg
