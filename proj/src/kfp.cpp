#include "ergmfg/kfp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <sstream>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "ergmfg/errors.hpp"

namespace ergmfg {

namespace {

// Bernoulli function t / (e^t - 1), stable around t = 0.
double bernoulli(double t) {
  if (std::abs(t) < 1e-8) return 1.0 - 0.5 * t + t * t / 12.0;
  const double e = std::expm1(t);
  if (std::isinf(e)) return 0.0;
  return t / e;
}

struct MaskIndex {
  std::vector<int> node_of;           // mask order -> node
  std::vector<int> row_of;            // node -> mask order, -1 outside
};

MaskIndex build_mask(const Domain& dom, double delta) {
  MaskIndex mi;
  mi.row_of.assign(dom.size(), -1);
  for (std::size_t i = 0; i < dom.size(); ++i) {
    if (dom.in_mask(i, delta)) {
      mi.row_of[i] = static_cast<int>(mi.node_of.size());
      mi.node_of.push_back(static_cast<int>(i));
    }
  }
  return mi;
}

void require_connected(const Domain& dom, const MaskIndex& mi, double delta) {
  if (mi.node_of.empty()) throw Error("kfp: empty mask at delta = " + std::to_string(delta));
  std::vector<char> seen(mi.node_of.size(), 0);
  std::deque<int> queue{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!queue.empty()) {
    const int r = queue.front();
    queue.pop_front();
    const std::size_t i = mi.node_of[r];
    for (int a = 0; a < dom.dim(); ++a) {
      for (int dir = 0; dir < 2; ++dir) {
        const int j = dom.neighbor(i, a, dir);
        if (j < 0) continue;
        const int rj = mi.row_of[j];
        if (rj >= 0 && !seen[rj]) {
          seen[rj] = 1;
          ++reached;
          queue.push_back(rj);
        }
      }
    }
  }
  if (reached != mi.node_of.size())
    throw StructuralError(
        "kfp: stationary operator kernel is not one-dimensional (mask at delta = " +
        std::to_string(delta) + " splits into several components)");
}

double face_drift(const DriftField& b, std::size_t i, std::size_t j, int axis) {
  const double bi = axis == 0 ? b.b.vx[i] : b.b.vy[i];
  const double bj = axis == 0 ? b.b.vx[j] : b.b.vy[j];
  return 0.5 * (bi + bj);
}

SparseOperator assemble_divergence_form(const Domain& dom, const DriftField& b,
                                        const MaskIndex& mi) {
  SparseOperator op;
  op.n = static_cast<int>(mi.node_of.size());
  op.node_of = mi.node_of;
  const double h = dom.h();
  const double h2 = h * h;
  std::map<std::pair<int, int>, double> acc;
  for (int r = 0; r < op.n; ++r) {
    const std::size_t i = mi.node_of[r];
    for (int a = 0; a < dom.dim(); ++a) {
      const int j = dom.neighbor(i, a, 1);
      if (j < 0) continue;
      const int rj = mi.row_of[j];
      if (rj < 0) continue;  // no-flux closure at the wall
      const double beta = face_drift(b, i, j, a) * h;
      const double c_out = bernoulli(beta) / h2;    // weight on m_i
      const double c_in = bernoulli(-beta) / h2;    // weight on m_j
      // Flux F = (1/h)(B(-beta) m_j - B(beta) m_i); divergence rows i and j.
      acc[{r, rj}] += c_in;
      acc[{r, r}] -= c_out;
      acc[{rj, rj}] -= c_in;
      acc[{rj, r}] += c_out;
    }
  }
  for (const auto& [key, v] : acc) {
    op.rows.push_back(key.first);
    op.cols.push_back(key.second);
    op.vals.push_back(v);
  }
  return op;
}

}  // namespace

SparseOperator assemble_kfp_operator(const DriftField& b, double delta) {
  const Domain& dom = *b.b.dom;
  const MaskIndex mi = build_mask(dom, delta);
  require_connected(dom, mi, delta);
  return assemble_divergence_form(dom, b, mi);
}

SparseOperator assemble_advection_operator(const DriftField& b, double delta) {
  const Domain& dom = *b.b.dom;
  const MaskIndex mi = build_mask(dom, delta);
  require_connected(dom, mi, delta);
  SparseOperator op;
  op.n = static_cast<int>(mi.node_of.size());
  op.node_of = mi.node_of;
  const double h = dom.h();
  const double h2 = h * h;
  std::map<std::pair<int, int>, double> acc;
  for (int r = 0; r < op.n; ++r) {
    const std::size_t i = mi.node_of[r];
    for (int a = 0; a < dom.dim(); ++a) {
      const int j = dom.neighbor(i, a, 1);
      if (j < 0) continue;
      const int rj = mi.row_of[j];
      if (rj < 0) continue;
      const double beta = face_drift(b, i, j, a) * h;
      const double c_out = bernoulli(beta) / h2;
      const double c_in = bernoulli(-beta) / h2;
      // (Lap v - b.Dv) picks up B(beta) v_j from the upper face of row r and
      // B(-beta) v_i from the lower face of row rj.
      acc[{r, rj}] += c_out;
      acc[{r, r}] -= c_out;
      acc[{rj, r}] += c_in;
      acc[{rj, rj}] -= c_in;
    }
  }
  for (const auto& [key, v] : acc) {
    op.rows.push_back(key.first);
    op.cols.push_back(key.second);
    op.vals.push_back(v);
  }
  return op;
}

Density solve_kfp_neumann(const DriftField& b, double delta) {
  const Domain& dom = *b.b.dom;
  if (!(delta >= 2.0 * dom.h() - 1e-12))
    throw ConfigError("solve_kfp_neumann: delta must be at least 2h");
  const MaskIndex mi = build_mask(dom, delta);
  require_connected(dom, mi, delta);
  const SparseOperator opt = assemble_divergence_form(dom, b, mi);
  const int n = opt.n;

  Eigen::SparseMatrix<double> A(n, n);
  {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(opt.vals.size());
    for (std::size_t k = 0; k < opt.vals.size(); ++k)
      trip.emplace_back(opt.rows[k], opt.cols[k], opt.vals[k]);
    A.setFromTriplets(trip.begin(), trip.end());
  }

  double diag_scale = 0.0;
  for (int r = 0; r < n; ++r) diag_scale = std::max(diag_scale, std::abs(A.coeff(r, r)));
  if (diag_scale == 0.0) diag_scale = 1.0;
  const double sigma = 1e-10 * diag_scale;

  // Inverse iteration on (sigma I - A): inverse-positive, so the iterates
  // stay strictly positive and align with the Perron null vector.
  Eigen::SparseMatrix<double> M = -A;
  for (int r = 0; r < n; ++r) M.coeffRef(r, r) += sigma;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(M);
  if (lu.info() != Eigen::Success)
    throw SolverError("kfp: factorization of the shifted operator failed", 0.0);

  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  for (int it = 0; it < 3; ++it) {
    x = lu.solve(x);
    x /= x.cwiseAbs().maxCoeff();
  }
  const double res = (A * x).cwiseAbs().maxCoeff() / (diag_scale * x.cwiseAbs().maxCoeff());
  if (!(res < 1e-12))
    throw StructuralError("kfp: inverse iteration left a residual of " + std::to_string(res) +
                          "; the null space is ill determined");
  if (!(x.minCoeff() > 0.0))
    throw StructuralError("kfp: stationary vector is not strictly positive");

  Density out;
  out.m = GridField(dom, 0.0, delta);
  out.m.support_delta = delta;
  double mass = 0.0;
  for (int r = 0; r < n; ++r) mass += x[r];
  mass *= dom.cell_volume();
  for (int r = 0; r < n; ++r) out.m.v[mi.node_of[r]] = x[r] / mass;
  return out;
}

DriftConstantEstimate estimate_drift_constant(const DriftField& b) {
  const Domain& dom = *b.b.dom;
  const double h = dom.h();
  std::map<int, std::pair<double, int>> bands;  // band -> (sum of (b.nu) d, count)
  std::map<int, double> dsum;
  for (std::size_t i = 0; i < dom.size(); ++i) {
    const double d = dom.boundary_distance(i);
    if (!dom.is_interior(i) || d <= 2.0 * h || d > dom.epsilon0() / 2.0) continue;
    const int k = static_cast<int>(std::floor(d / h));
    bands[k].first += b.b.at(i).dot(dom.nu(i)) * d;
    bands[k].second += 1;
    dsum[k] += d;
  }
  DriftConstantEstimate est;
  for (const auto& [k, v] : bands)
    est.bands.emplace_back(dsum[k] / v.second, v.first / v.second);
  if (est.bands.size() < 3) {
    est.C = est.bands.empty() ? 0.0 : est.bands.front().second;
    return est;
  }
  // Linear extrapolation to d = 0. The innermost bands carry the centered
  // difference's (h/d)^2 error, so the fit starts above max(5.5h, 0.01).
  const double lo = std::max(5.5 * h, 0.01);
  double sx = 0, sy = 0, sxx = 0, sxy = 0, nn = 0;
  for (const auto& [d, y] : est.bands) {
    if (d < lo) continue;
    sx += d;
    sy += y;
    sxx += d * d;
    sxy += d * y;
    nn += 1;
  }
  if (nn < 3) {  // very coarse grid: fall back to the innermost sampled value
    est.C = est.bands.front().second;
    return est;
  }
  const double det = nn * sxx - sx * sx;
  est.C = (det != 0.0) ? (sxx * sy - sx * sxy) / det : sy / nn;
  return est;
}

std::vector<double> default_continuation(const Domain& dom, double first) {
  std::vector<double> out;
  const double floor_delta = 2.0 * dom.h();
  double d = first;
  while (d > floor_delta * 1.5) {
    out.push_back(d);
    d *= 0.5;
  }
  out.push_back(floor_delta);
  return out;
}

Density solve_kfp_whole(const DriftField& b, const std::vector<double>& continuation,
                        KfpContinuationTrace* trace) {
  const Domain& dom = *b.b.dom;
  if (continuation.empty()) throw ConfigError("solve_kfp_whole: empty continuation schedule");
  for (std::size_t k = 1; k < continuation.size(); ++k)
    if (!(continuation[k] < continuation[k - 1]))
      throw ConfigError("solve_kfp_whole: continuation schedule must decrease strictly");
  if (!(continuation.back() >= 2.0 * dom.h() - 1e-12))
    throw ConfigError("solve_kfp_whole: continuation must stop at or above 2h");

  const DriftConstantEstimate est = estimate_drift_constant(b);
  if (!(est.C > 1.05))
    throw TightnessError(
        "solve_kfp_whole: drift fails the inward-blowup diagnostic (b.nu) d -> C > 1 "
        "(estimated C = " + std::to_string(est.C) + ")");

  Density prev, cur;
  std::vector<double> diffs;
  for (std::size_t k = 0; k < continuation.size(); ++k) {
    cur = solve_kfp_neumann(b, continuation[k]);
    if (k > 0) {
      double l1 = 0.0;
      for (std::size_t i = 0; i < dom.size(); ++i) l1 += std::abs(cur.m.v[i] - prev.m.v[i]);
      diffs.push_back(l1 * dom.cell_volume());
    }
    prev = cur;
  }
  if (trace) {
    trace->deltas = continuation;
    trace->l1_diffs = diffs;
  }
  if (diffs.size() >= 2 && diffs.back() > diffs[diffs.size() - 2] + 1e-14) {
    std::ostringstream msg;
    msg << "solve_kfp_whole: continuation is not L1-Cauchy (";
    for (double d : diffs) msg << d << ' ';
    msg << "); escaping mass near the wall: ";
    for (double band = continuation.back(); band < 8.0 * continuation.back(); band *= 2.0) {
      double massband = 0.0;
      for (std::size_t i = 0; i < dom.size(); ++i)
        if (dom.boundary_distance(i) <= band) massband += cur.m.v[i];
      msg << massband * dom.cell_volume() << " below d=" << band << "; ";
    }
    throw TightnessError(msg.str());
  }

  cur.m.support_delta = 0.0;  // stamped as the whole-domain solution
  return cur;
}

WeightedNormResult weighted_norm(const Density& m, double gamma) {
  if (!(gamma > 0.0)) throw ConfigError("weighted_norm: gamma must be positive");
  const Domain& dom = *m.m.dom;
  WeightedNormResult res;
  const double dmax = dom.max_distance();
  std::map<int, double> bands;
  for (std::size_t i = 0; i < dom.size(); ++i) {
    if (!dom.in_mask(i, m.m.support_delta)) continue;
    const double d = dom.boundary_distance(i);
    const double term = std::pow(d, -gamma) * std::abs(m.m.v[i]) * dom.cell_volume();
    res.value += term;
    const int k = std::max(0, static_cast<int>(std::floor(std::log2(dmax / d))));
    bands[k] += term;
  }
  for (const auto& [k, s] : bands)
    res.bands.push_back({dmax / std::pow(2.0, k), s});

  // Ratio test on the three finest consecutive dyadic bands.
  const std::size_t nb = res.bands.size();
  if (nb >= 4) {
    bool growing = true;
    for (std::size_t k = nb - 4; k + 1 < nb; ++k) {
      if (!(res.bands[k + 1].sum >= res.bands[k].sum)) {
        growing = false;
        break;
      }
    }
    res.divergent = growing;
  }
  return res;
}

double harnack_ratio(const Density& m, double delta) {
  const Domain& dom = *m.m.dom;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t i = 0; i < dom.size(); ++i) {
    if (!dom.in_mask(i, delta)) continue;
    lo = std::min(lo, m.m.v[i]);
    hi = std::max(hi, m.m.v[i]);
  }
  return hi / lo;
}

void LyapunovSpec::validate() const {
  if (!(C > 1.0)) throw ConfigError("lyapunov: C must exceed 1");
  if (!(epsilon > 0.0 && epsilon < C - 1.0))
    throw ConfigError("lyapunov: epsilon must lie in (0, C-1)");
}

namespace {

// Lap V - b.DV for V = d^{-C+1+eps}, with the smooth extended distance.
double lyapunov_expression(const Domain& dom, const DriftField& b, std::size_t i, double kappa) {
  const double d = dom.d(i);
  const Vec2 gd = dom.grad_d(i);
  const double g2 = gd.dot(gd);
  const double lap_v =
      kappa * (kappa - 1.0) * std::pow(d, kappa - 2.0) * g2 +
      kappa * std::pow(d, kappa - 1.0) * dom.laplacian_d(i);
  const double b_dot_dv = kappa * std::pow(d, kappa - 1.0) * b.b.at(i).dot(gd);
  return lap_v - b_dot_dv;
}

}  // namespace

CertificateReport lyapunov_certificate(const DriftField& b, const Density& m,
                                       const LyapunovSpec& spec) {
  spec.validate();
  const Domain& dom = *b.b.dom;
  const double h = dom.h();
  const double kappa = -spec.C + 1.0 + spec.epsilon;

  const DriftConstantEstimate est = estimate_drift_constant(b);
  if (!(est.C > 1.05))
    throw ConfigError(
        "lyapunov_certificate: drift fails the pre-condition (b.nu) d -> C > 1 (estimated C = " +
        std::to_string(est.C) + ")");

  GridField expr(dom);
  for (std::size_t i = 0; i < dom.size(); ++i)
    if (dom.is_interior(i)) expr.v[i] = lyapunov_expression(dom, b, i, kappa);

  // delta*: the threshold below which Lap V - b.DV <= -1 holds node-wise
  // (checked on interior nodes, where the drift is defined).
  auto verified_up_to = [&](double delta) {
    for (std::size_t i = 0; i < dom.size(); ++i) {
      if (!dom.is_interior(i)) continue;
      const double d = dom.boundary_distance(i);
      if (d <= delta && !(expr.v[i] <= -1.0)) return false;
    }
    return true;
  };

  double delta_star = spec.delta_star;
  if (delta_star <= 0.0) {
    const int kmax = static_cast<int>(std::floor(dom.epsilon0() / h));
    int found = -1;
    for (int k = kmax; k >= 2; --k) {
      if (verified_up_to(k * h)) {
        found = k;
        break;
      }
    }
    if (found < 0)
      throw ConfigError("lyapunov_certificate: no neighborhood with Lap V - b.DV <= -1; "
                        "the drift violates the asymptotic assumption");
    delta_star = found * h;
  } else if (!verified_up_to(delta_star)) {
    throw ConfigError("lyapunov_certificate: Lap V - b.DV fails to stay <= -1 outside "
                      "Omega_{delta*}; delta* too large or the drift violates the asymptotics");
  }

  CertificateReport rep;
  rep.delta_star = delta_star;
  rep.exponent = -spec.C - 1.0 + spec.epsilon;

  auto band_integral = [&](double delta) {
    double s = 0.0;
    for (std::size_t i = 0; i < dom.size(); ++i) {
      if (!dom.is_interior(i) || !dom.in_mask(i, delta)) continue;
      s += std::abs(expr.v[i]) * m.m.v[i];
    }
    return s * dom.cell_volume();
  };

  rep.S = band_integral(delta_star);
  rep.tolerance = 2.0 * rep.S * 1e-6;
  rep.pass = true;
  for (double delta = delta_star; delta >= 2.0 * h - 1e-12; delta *= 0.5) {
    const double v = band_integral(delta);
    rep.band_table.push_back({delta, v});
    if (v > 2.0 * rep.S + rep.tolerance) rep.pass = false;
    if (delta == 2.0 * h) break;
    if (delta * 0.5 < 2.0 * h) {
      const double v2 = band_integral(2.0 * h);
      rep.band_table.push_back({2.0 * h, v2});
      if (v2 > 2.0 * rep.S + rep.tolerance) rep.pass = false;
      break;
    }
  }

  rep.weighted_norm = weighted_norm(m, spec.C + 1.0 - spec.epsilon).value;
  return rep;
}

double BumpTestFunction::value(const Vec2& p) const {
  const Vec2 r = p - center;
  const double s = r.dot(r);
  const double r2 = radius * radius;
  if (s >= r2) return 0.0;
  const double u = 1.0 - s / r2;
  return amplitude * u * u * u;
}

Vec2 BumpTestFunction::grad(const Vec2& p) const {
  const Vec2 r = p - center;
  const double s = r.dot(r);
  const double r2 = radius * radius;
  if (s >= r2) return {0.0, 0.0};
  const double u = 1.0 - s / r2;
  const double f = -6.0 * amplitude * u * u / r2;
  return {f * r.x, f * r.y};
}

double BumpTestFunction::laplacian(const Vec2& p) const {
  const Vec2 r = p - center;
  const double s = r.dot(r);
  const double r2 = radius * radius;
  if (s >= r2) return 0.0;
  const double u = 1.0 - s / r2;
  return 24.0 * amplitude * u * s / (r2 * r2) - 6.0 * amplitude * dim * u * u / r2;
}

double weak_residual(const Density& m, const DriftField& b, const BumpTestFunction& phi) {
  const Domain& dom = *m.m.dom;
  const double dc = dom.distance_of_point(phi.center);
  if (!(phi.radius + 2.0 * dom.h() <= dc))
    throw ConfigError("weak_residual: bump support must stay inside Omega_{2h}");
  double acc = 0.0;
  for (std::size_t i = 0; i < dom.size(); ++i) {
    if (!dom.in_mask(i, m.m.support_delta)) continue;
    const Vec2 p = dom.coord(i);
    acc += (phi.laplacian(p) - b.b.at(i).dot(phi.grad(p))) * m.m.v[i];
  }
  return acc * dom.cell_volume();
}

}  // namespace ergmfg
