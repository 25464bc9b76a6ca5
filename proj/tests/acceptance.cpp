// Acceptance suite: one line per criterion, non-zero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "ergmfg/asymptotics.hpp"
#include "ergmfg/coupling.hpp"
#include "ergmfg/domain.hpp"
#include "ergmfg/hjb.hpp"
#include "ergmfg/kfp.hpp"
#include "ergmfg/mfg.hpp"
#include "ergmfg/particles.hpp"

using namespace ergmfg;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

Domain make_interval(int res) {
  DomainSpec s;
  s.kind = DomainKind::Interval;
  s.resolution = res;
  return Domain::build(s);
}

HJBProblem zero_problem(const Domain& dom, double q) {
  HJBProblem p;
  p.q = q;
  p.dom = &dom;
  p.g = GridField(dom);
  p.x0 = dom.center_node();
  return p;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

bool within(double value, double target, double rel) {
  return std::abs(value - target) <= rel * std::abs(target);
}

// Shared reference runs, built once.
struct SharedRuns {
  Domain dom512 = make_interval(512);
  Domain dom256 = make_interval(256);
  Domain dom128 = make_interval(128);

  ValueSolution hjb15_512;  // q = 1.5, g = 0, h = 1/512
  ValueSolution hjb20_512;  // q = 2
  AsymptoticsReport rep15, rep20;
  double seconds_hjb15 = 0.0;

  Coupling tanh256 = Coupling::local(dom256, "tanh");
  Coupling tanh128 = Coupling::local(dom128, "tanh");
  MFGSolution mfg256, mfg128;
  double seconds_mfg256 = 0.0;

  DriftField drift128;  // certified q = 1.5 reference drift at h = 1/128
  Density m128;         // its stationary law
  DriftField drift256;
  Density m256;

  SharedRuns() {
    {
      Timer t;
      hjb15_512 = solve_ergodic(zero_problem(dom512, 1.5));
      rep15 = fit_boundary_asymptotics(hjb15_512);
      seconds_hjb15 = t.seconds();
    }
    hjb20_512 = solve_ergodic(zero_problem(dom512, 2.0));
    rep20 = fit_boundary_asymptotics(hjb20_512);

    MFGConfig cfg;
    cfg.dom = &dom256;
    cfg.coupling = &tanh256;
    cfg.q = 1.5;
    cfg.delta_schedule = {0.1, 0.05, 0.025};
    cfg.fp_tolerance = 1e-8;
    cfg.max_iterations = 200;
    {
      Timer t;
      mfg256 = solve_local(cfg);
      seconds_mfg256 = t.seconds();
    }

    MFGConfig cfg128 = cfg;
    cfg128.dom = &dom128;
    cfg128.coupling = &tanh128;
    mfg128 = solve_local(cfg128);

    drift128 = drift_from_value(solve_ergodic(zero_problem(dom128, 1.5)));
    m128 = solve_kfp_whole(drift128, default_continuation(dom128));
    drift256 = drift_from_value(solve_ergodic(zero_problem(dom256, 1.5)));
    m256 = solve_kfp_whole(drift256, default_continuation(dom256));
  }
};

Outcome criterion1(const SharedRuns& shared) {
  const AsymptoticsReport& rep = shared.rep15;
  Outcome out;
  const bool runtime_ok = shared.seconds_hjb15 < 60.0;
  out.pass = within(rep.exponent_fit, -1.0, 0.05) && within(rep.prefactor_fit, 4.0, 0.10) &&
             within(rep.gradient_limit, 4.0, 0.10) && within(rep.drift_limit, 3.0, 0.10) &&
             runtime_ok;
  out.detail = "exponent " + fmt(rep.exponent_fit) + " (target -1 +-5%), prefactor " +
               fmt(rep.prefactor_fit) + " (4 +-10%), gradient " + fmt(rep.gradient_limit) +
               " (4 +-10%), drift " + fmt(rep.drift_limit) + " (3 +-10%), " +
               fmt(shared.seconds_hjb15) + "s";
  return out;
}

Outcome criterion2(const SharedRuns& shared) {
  const AsymptoticsReport& rep = shared.rep20;
  Outcome out;
  out.pass = within(rep.log_slope, 1.0, 0.10) && within(rep.drift_limit, 2.0, 0.10);
  out.detail = "u/(-log d) slope " + fmt(rep.log_slope) + " (1 +-10%), (b.nu)d " +
               fmt(rep.drift_limit) + " (2 +-10%)";
  return out;
}

Outcome criterion3(const SharedRuns& shared) {
  const double c = 2.5;
  HJBProblem p = zero_problem(shared.dom512, 1.5);
  for (auto& v : p.g.v) v = c;
  const ValueSolution shifted = solve_ergodic(p);
  const double rho_gap = std::abs(shifted.rho - shared.hjb15_512.rho - c);
  double u_gap = 0.0;
  for (std::size_t i = 0; i < shared.dom512.size(); ++i)
    u_gap = std::max(u_gap, std::abs(shifted.u.v[i] - shared.hjb15_512.u.v[i]));
  Outcome out;
  out.pass = rho_gap < 1e-8 && u_gap < 1e-8;
  out.detail = "|rho shift - c| = " + fmt(rho_gap) + ", max|u diff| = " + fmt(u_gap) +
               " (both < 1e-8)";
  return out;
}

Outcome criterion4(const SharedRuns& shared) {
  const double gap15 = std::abs(shared.hjb15_512.rho_extrapolated - shared.hjb15_512.rho);
  const double gap20 = std::abs(shared.hjb20_512.rho_extrapolated - shared.hjb20_512.rho);
  Outcome out;
  out.pass = gap15 < 1e-4 && gap20 < 1e-4;
  out.detail = "discount vs direct: q=1.5 gap " + fmt(gap15) + ", q=2 gap " + fmt(gap20) +
               " (both < 1e-4)";
  return out;
}

Outcome criterion5(const SharedRuns& shared) {
  const Domain& dom = shared.dom256;
  DriftField zero;
  zero.q = 1.5;
  zero.b = VectorGridField(dom, 0.0);
  const Density mu = solve_kfp_neumann(zero, 0.1);
  const double expectu = 1.0 / dom.mask_volume(0.1);
  double dev_uniform = 0.0;
  for (std::size_t i = 0; i < dom.size(); ++i)
    if (dom.in_mask(i, 0.1)) dev_uniform = std::max(dev_uniform, std::abs(mu.m.v[i] - expectu));

  DriftField cdrift = zero;
  for (std::size_t i = 0; i < dom.size(); ++i) cdrift.b.vx[i] = 2.0;
  const Density mc = solve_kfp_neumann(cdrift, 0.1);
  double mass_ref = 0.0;
  for (std::size_t i = 0; i < dom.size(); ++i)
    if (dom.in_mask(i, 0.1)) mass_ref += std::exp(-2.0 * dom.coord(i).x);
  mass_ref *= dom.cell_volume();
  double rel_exp = 0.0;
  for (std::size_t i = 0; i < dom.size(); ++i) {
    if (!dom.in_mask(i, 0.1)) continue;
    const double expect = std::exp(-2.0 * dom.coord(i).x) / mass_ref;
    rel_exp = std::max(rel_exp, std::abs(mc.m.v[i] - expect) / expect);
  }

  double mass_gap = 0.0;
  bool nonneg = true;
  for (const Density* d : {&mu, &mc, &shared.mfg256.m, &shared.m128}) {
    mass_gap = std::max(mass_gap, std::abs(d->mass() - 1.0));
    for (double v : d->m.v) nonneg = nonneg && v >= 0.0;
  }

  Outcome out;
  out.pass = dev_uniform < 1e-10 && rel_exp < 1e-8 && mass_gap < 1e-12 && nonneg;
  out.detail = "uniform dev " + fmt(dev_uniform) + " (<1e-10), exp profile rel err " +
               fmt(rel_exp) + " (<1e-8), mass gap " + fmt(mass_gap) + " (<1e-12), nonneg " +
               (nonneg ? "yes" : "no");
  return out;
}

Outcome criterion6(const SharedRuns& shared) {
  const WeightedNormResult w256 = weighted_norm(shared.mfg256.m, 3.0);
  const WeightedNormResult w128 = weighted_norm(shared.mfg128.m, 3.0);
  const double rel_gap = std::abs(w256.value - w128.value) / w256.value;

  bool cert_ok = shared.mfg256.certificate.has_value() && shared.mfg256.certificate->pass;
  double worst_ratio = 0.0;
  if (shared.mfg256.certificate) {
    for (const auto& band : shared.mfg256.certificate->band_table)
      worst_ratio = std::max(worst_ratio, band.integral / (2.0 * shared.mfg256.certificate->S));
    cert_ok = cert_ok && worst_ratio <= 1.0 + 1e-6;
  }

  Outcome out;
  out.pass = !w256.divergent && !w128.divergent && rel_gap < 0.10 && cert_ok;
  out.detail = "d^-3 norm " + fmt(w256.value) + " vs " + fmt(w128.value) + " (gap " +
               fmt(rel_gap) + " < 10%), certificate max I/2S " + fmt(worst_ratio) +
               " (<= 1+1e-6)";
  return out;
}

Outcome criterion7(const SharedRuns& shared) {
  Outcome out;
  bool residual_ok = true;
  for (const auto& stage : shared.mfg256.delta_trace)
    residual_ok = residual_ok && stage.fp_residual < 1e-8 && stage.iterations <= 200;
  const auto& tr = shared.mfg256.delta_trace;
  const double rho_gap1 = std::abs(tr[1].rho - tr[0].rho);
  const double rho_gap2 = std::abs(tr[2].rho - tr[1].rho);
  const bool runtime_ok = shared.seconds_mfg256 < 300.0;
  out.pass = residual_ok && rho_gap2 < rho_gap1 && runtime_ok;
  out.detail = "residuals < 1e-8 at each delta: " + std::string(residual_ok ? "yes" : "no") +
               ", |rho_0.025-rho_0.05| " + fmt(rho_gap2) + " < |rho_0.05-rho_0.1| " +
               fmt(rho_gap1) + ", " + fmt(shared.seconds_mfg256) + "s";
  return out;
}

Outcome criterion8(const SharedRuns& shared) {
  const Domain& dom = shared.dom256;
  MFGConfig cfg;
  cfg.dom = &dom;
  cfg.coupling = &shared.tanh256;
  cfg.q = 1.5;
  cfg.delta_schedule = {0.1, 0.05, 0.025};
  cfg.fp_tolerance = 1e-8;

  Density tilt;
  tilt.m = GridField(dom, 0.0, 0.1);
  tilt.m.support_delta = 0.1;
  for (std::size_t i = 0; i < dom.size(); ++i)
    if (dom.in_mask(i, 0.1)) tilt.m.v[i] = 1.0 + 0.4 * std::sin(M_PI * dom.coord(i).x);
  const double tmass = tilt.mass();
  for (auto& v : tilt.m.v) v /= tmass;

  const MFGSolution& a = shared.mfg256;
  const MFGSolution b = solve_local(cfg, tilt);

  double l1 = 0.0;
  for (std::size_t i = 0; i < dom.size(); ++i) l1 += std::abs(a.m.m.v[i] - b.m.m.v[i]);
  l1 *= dom.cell_volume();
  const double rho_gap = std::abs(a.rho - b.rho);

  // The remainder terms are bilinear in the gap between the two solutions,
  // so once uniqueness has forced the runs together they sit at the zero
  // floor; "shrinking" is then satisfied as achieved. The floor is far above
  // the roundoff scale of the quadrature and far below any meaningful
  // remainder.
  const double floor = 1e-12;
  bool signs_ok = true;
  bool shrink_ok = true;
  std::string rem_detail;
  double prev_dphi = 0.0, prev_lap = 0.0;
  for (double delta : {0.1, 0.05, 0.025}) {
    const IdentityReport rep = uniqueness_diagnostic(a, b, delta);
    signs_ok = signs_ok && rep.monotone_term >= -1e-8 && rep.convexity_1 <= 1e-8 &&
               rep.convexity_2 <= 1e-8;
    if (delta < 0.1) {
      shrink_ok = shrink_ok &&
                  std::abs(rep.dphi_remainder) <= std::max(0.5 * prev_dphi, floor) &&
                  std::abs(rep.lapphi_remainder) <= std::max(0.5 * prev_lap, floor);
    }
    prev_dphi = std::abs(rep.dphi_remainder);
    prev_lap = std::abs(rep.lapphi_remainder);
    rem_detail += " " + fmt(prev_dphi);
  }

  Outcome out;
  out.pass = l1 < 1e-6 && rho_gap < 1e-4 && signs_ok && shrink_ok;
  out.detail = "L1 gap " + fmt(l1) + " (<1e-6), rho gap " + fmt(rho_gap) +
               " (<1e-4), identity signs " + (signs_ok ? "ok" : "VIOLATED") +
               ", Dphi remainders per delta:" + rem_detail +
               (shrink_ok ? " (>=2x shrink)" : " (SHRINK FAILED)");
  return out;
}

Outcome criterion9(const SharedRuns& shared) {
  Timer t;
  ParticleConfig cfg;
  cfg.dom = &shared.dom128;
  cfg.drift = &shared.drift128;
  cfg.certified_constant = drift_limit_constant(1.5);
  cfg.n_particles = 10000;
  cfg.horizon = 10.0;
  cfg.base_dt = 1e-4;
  cfg.safety_band = 0.1;
  cfg.seed = 2024;
  cfg.start = {0.5, 0.0};
  cfg.reference = &shared.m128;
  const EnsembleReport certified = simulate(cfg);

  ParticleConfig brown;
  brown.dom = &shared.dom128;
  brown.n_particles = 10000;
  brown.horizon = 1.0;
  brown.base_dt = 2e-4;
  brown.seed = 2025;
  brown.start = {0.5, 0.0};
  const EnsembleReport free_run = simulate(brown);
  const double oracle = brownian_exit_probability(0.5, 1.0, 1.0);
  const double fraction = static_cast<double>(free_run.exit_count) / brown.n_particles;
  const double seconds = t.seconds();

  Outcome out;
  out.pass = certified.exit_count == 0 && certified.tv_distance < 0.1 && fraction > 0.0 &&
             std::abs(fraction - oracle) < 0.02 && seconds < 120.0;
  out.detail = "exits " + std::to_string(certified.exit_count) + " (=0), TV " +
               fmt(certified.tv_distance) + " (<0.1), Brownian exit " + fmt(fraction) +
               " vs oracle " + fmt(oracle) + " (+-2%), " + fmt(seconds) + "s";
  return out;
}

Outcome criterion10(const SharedRuns& shared) {
  const Domain& dom = shared.dom256;
  // O(1)-normalized soft bumps: the O(h) gate presumes bounded C2 data.
  std::mt19937 gen(17);
  std::uniform_real_distribution<double> cen(0.45, 0.55), rad(0.30, 0.44);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    BumpTestFunction phi;
    phi.dim = dom.dim();
    phi.center = {cen(gen), 0.0};
    phi.radius = std::min(rad(gen), dom.distance_of_point(phi.center) - 3.0 * dom.h());
    worst = std::max(worst, std::abs(weak_residual(shared.m256, shared.drift256, phi)));
  }
  Outcome out;
  out.pass = worst <= 5.0 * dom.h();
  out.detail = "max |weak residual| over 10 bumps = " + fmt(worst) + " (<= 5h = " +
               fmt(5.0 * dom.h()) + ")";
  return out;
}

Outcome criterion11(const SharedRuns& shared) {
  const Domain& dom = shared.dom256;
  HJBProblem base = zero_problem(dom, 1.5);
  const GridField bump = make_rhs(dom, "sinpi:1.0");
  const ValueSolution limit = solve_ergodic(base);

  std::vector<double> u_err, rho_err;
  for (int n = 0; n < 3; ++n) {
    HJBProblem p = base;
    const double amp = std::pow(2.0, -(n + 1));
    for (std::size_t i = 0; i < dom.size(); ++i) p.g.v[i] = amp * bump.v[i];
    const ValueSolution sol = solve_ergodic(p);
    double du = 0.0;
    for (std::size_t i = 0; i < dom.size(); ++i)
      if (dom.in_mask(i, 0.1)) du = std::max(du, std::abs(sol.u.v[i] - limit.u.v[i]));
    u_err.push_back(du);
    rho_err.push_back(std::abs(sol.rho - limit.rho));
  }
  const bool monotone = u_err[1] < u_err[0] && u_err[2] < u_err[1] && rho_err[1] < rho_err[0] &&
                        rho_err[2] < rho_err[1];
  Outcome out;
  out.pass = monotone;
  out.detail = "u errors " + fmt(u_err[0]) + " > " + fmt(u_err[1]) + " > " + fmt(u_err[2]) +
               "; rho errors " + fmt(rho_err[0]) + " > " + fmt(rho_err[1]) + " > " +
               fmt(rho_err[2]);
  return out;
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* label;
    Outcome (*fn)(const SharedRuns&);
  };
  const std::vector<Entry> entries = {
      {1, "boundary asymptotics, q=1.5, h=1/512", criterion1},
      {2, "logarithmic regime, q=2, h=1/512", criterion2},
      {3, "shift invariance of the ergodic constant", criterion3},
      {4, "vanishing-discount vs direct rho", criterion4},
      {5, "stationary-measure exactness", criterion5},
      {6, "weighted bound and tightness certificate", criterion6},
      {7, "fixed-point convergence, local tanh coupling", criterion7},
      {8, "uniqueness under the monotone coupling", criterion8},
      {9, "state constraint by particle simulation", criterion9},
      {10, "weak-formulation residuals", criterion10},
      {11, "stability under converging data", criterion11},
  };

  std::printf("building shared reference runs...\n");
  Timer total;
  SharedRuns shared;
  std::printf("shared runs ready after %.1fs\n\n", total.seconds());

  int failures = 0;
  for (const auto& entry : entries) {
    Timer t;
    Outcome out;
    try {
      out = entry.fn(shared);
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] criterion %2d: %s  --  %s  [%.1fs]\n", out.pass ? "PASS" : "FAIL",
                entry.id, entry.label, out.detail.c_str(), t.seconds());
    if (!out.pass) ++failures;
  }
  std::printf("\n%d/%zu criteria passed in %.1fs\n", static_cast<int>(entries.size()) - failures,
              entries.size(), total.seconds());
  return failures == 0 ? 0 : 1;
}
