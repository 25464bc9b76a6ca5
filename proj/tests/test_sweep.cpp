#include <doctest.h>

#include <cmath>
#include <map>

#include "ergmfg/asymptotics.hpp"
#include "ergmfg/errors.hpp"

using namespace ergmfg;

TEST_CASE("sweep plan validation") {
  SweepPlan plan;
  plan.base_domain.kind = DomainKind::Interval;
  plan.resolutions = {128, 256};
  CHECK_THROWS_AS(plan.validate(), ConfigError);  // need three resolutions
  plan.resolutions = {128, 256, 384};
  CHECK_THROWS_AS(plan.validate(), ConfigError);  // not geometric
  plan.resolutions = {128, 256, 512};
  plan.q_values = {2.5};
  CHECK_THROWS_AS(plan.validate(), ConfigError);
  plan.q_values = {1.5};
  CHECK_NOTHROW(plan.validate());
}

TEST_CASE("rhs factory") {
  DomainSpec s;
  s.kind = DomainKind::Interval;
  s.resolution = 64;
  const Domain dom = Domain::build(s);
  CHECK(rhs_sup_norm(dom, "zero") == 0.0);
  CHECK(rhs_sup_norm(dom, "const:2.5") == doctest::Approx(2.5));
  CHECK(rhs_sup_norm(dom, "sinpi:5") == doctest::Approx(5.0).epsilon(1e-3));
  CHECK_THROWS_AS(make_rhs(dom, "wavelet:1"), ConfigError);
}

TEST_CASE("sweep: fitted exponents converge and the g-envelope is uniform") {
  SweepPlan plan;
  plan.base_domain.kind = DomainKind::Interval;
  plan.q_values = {1.25};
  plan.resolutions = {128, 256, 512};
  plan.g_family = {"zero", "sinpi:1", "sinpi:5"};
  const SweepReport rep = run_sweep(plan);
  REQUIRE(rep.entries.size() == 9);

  // Exponent error at the finest resolution at most half the coarsest one
  // (with a floor at the fit-window systematic).
  const double target = (1.25 - 2.0) / (1.25 - 1.0);
  std::map<int, double> worst_err;
  for (const auto& entry : rep.entries)
    worst_err[entry.resolution] =
        std::max(worst_err[entry.resolution], std::abs(entry.report.exponent_fit - target));
  CHECK(worst_err[512] <= std::max(0.5 * worst_err[128], 0.01 * std::abs(target)));

  // Gradient and drift limits improve too.
  std::map<int, double> grad_err, drift_err;
  for (const auto& entry : rep.entries) {
    grad_err[entry.resolution] = std::max(
        grad_err[entry.resolution],
        std::abs(entry.report.gradient_limit - gradient_limit_constant(entry.q)));
    drift_err[entry.resolution] =
        std::max(drift_err[entry.resolution],
                 std::abs(entry.report.drift_limit - drift_limit_constant(entry.q)));
  }
  CHECK(grad_err[512] < grad_err[128]);
  CHECK(drift_err[512] < drift_err[128]);

  // Uniformity in ||g||: at any band the spread across the family is far
  // below the deviation itself, and the common envelope decays with d.
  double inner_worst = 0.0, outer_worst = 0.0;
  for (const auto& row : rep.uniformity) {
    if (row.resolution != 512) continue;
    double lo = 1e300, hi = 0.0;
    for (double dev : row.deviation_per_g) {
      lo = std::min(lo, dev);
      hi = std::max(hi, dev);
    }
    CHECK(hi - lo <= 0.05 * hi + 1e-3);
    if (std::abs(row.d - 0.02) < 5e-3) inner_worst = std::max(inner_worst, row.worst);
    if (std::abs(row.d - 0.06) < 5e-3) outer_worst = std::max(outer_worst, row.worst);
  }
  CHECK(inner_worst > outer_worst);
}
