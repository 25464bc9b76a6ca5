#include <doctest.h>

#include <cmath>

#include "ergmfg/domain.hpp"
#include "ergmfg/hjb.hpp"
#include "ergmfg/kfp.hpp"
#include "ergmfg/particles.hpp"

using namespace ergmfg;

TEST_CASE("rectangle: square symmetry of the ergodic value") {
  DomainSpec s;
  s.kind = DomainKind::Rectangle;
  s.extents = {1.0, 1.0};
  s.resolution = 48;
  const Domain dom = Domain::build(s);

  HJBProblem p;
  p.q = 1.5;
  p.dom = &dom;
  p.g = GridField(dom);
  p.x0 = dom.center_node();
  p.lambda_schedule = {1e-1, 1e-2};
  const ValueSolution sol = solve_ergodic(p);
  CHECK(sol.residual_norm < 1e-10);
  CHECK(std::isfinite(sol.rho));

  // u(x, y) = u(y, x) on the unit square.
  double worst = 0.0;
  for (std::size_t i = 0; i < dom.size(); ++i) {
    const Vec2 c = dom.coord(i);
    const int j = dom.node_at({c.y, c.x});
    REQUIRE(j >= 0);
    worst = std::max(worst, std::abs(sol.u.v[i] - sol.u.v[j]));
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("disk: ergodic solve, boundary fits and stationary measure") {
  DomainSpec s;
  s.kind = DomainKind::Disk;
  s.extents = {1.0, 1.0};
  s.resolution = 192;
  const Domain dom = Domain::build(s);

  HJBProblem p;
  p.q = 1.5;
  p.dom = &dom;
  p.g = GridField(dom);
  p.x0 = dom.center_node();
  p.lambda_schedule = {1e-1, 1e-2};
  const ValueSolution sol = solve_ergodic(p);
  CHECK(sol.residual_norm < 1e-10);

  // Radial symmetry: compare nodes against their reflection through zero.
  double sym = 0.0;
  for (std::size_t i = 0; i < dom.size(); ++i) {
    const Vec2 c = dom.coord(i);
    const int j = dom.node_at({-c.x, -c.y});
    if (j >= 0) sym = std::max(sym, std::abs(sol.u.v[i] - sol.u.v[j]));
  }
  CHECK(sym < 1e-8);

  // The ragged boundary ring costs accuracy; the closed-form limits still
  // hold within a coarse margin.
  const AsymptoticsReport rep = fit_boundary_asymptotics(sol);
  CHECK(rep.drift_limit == doctest::Approx(3.0).epsilon(0.25));
  CHECK(rep.gradient_limit == doctest::Approx(4.0).epsilon(0.25));

  const DriftField b = drift_from_value(sol);
  const Density m = solve_kfp_whole(b, default_continuation(dom, 0.1));
  CHECK(std::abs(m.mass() - 1.0) < 1e-12);
  for (double v : m.m.v) CHECK(v >= 0.0);

  // Short particle run under the certified drift: interior confinement.
  ParticleConfig pc;
  pc.dom = &dom;
  pc.drift = &b;
  pc.certified_constant = drift_limit_constant(1.5);
  pc.n_particles = 100;
  pc.horizon = 0.5;
  pc.base_dt = 2e-4;
  pc.safety_band = 0.12;
  pc.seed = 5;
  pc.start = {0.0, 0.0};
  const EnsembleReport rep2 = simulate(pc);
  CHECK(rep2.exit_count == 0);
  CHECK(rep2.min_distance > 0.0);
}
