#include <doctest.h>

#include <cmath>
#include <random>

#include "ergmfg/domain.hpp"
#include "ergmfg/errors.hpp"

using namespace ergmfg;

namespace {

DomainSpec interval_spec(int res) {
  DomainSpec s;
  s.kind = DomainKind::Interval;
  s.extents = {1.0, 1.0};
  s.resolution = res;
  return s;
}

}  // namespace

TEST_CASE("interval distance field matches the exact distance below eps0") {
  const Domain dom = Domain::build(interval_spec(128));
  const double h = dom.h();
  CHECK(h == doctest::Approx(1.0 / 128));

  // d(0.25) = 0.25 exactly (node at 0.25 - h/2 has that distance).
  bool checked = false;
  for (std::size_t i = 0; i < dom.size(); ++i) {
    const double x = dom.coord(i).x;
    if (x < 0.5 && dom.boundary_distance(i) < dom.epsilon0()) {
      CHECK(dom.d(i) == dom.boundary_distance(i));  // bit-exact below the seam
      CHECK(dom.boundary_distance(i) == doctest::Approx(x));
      checked = true;
    }
  }
  CHECK(checked);

  // Center value is capped smoothly: M0 <= d <= 1.
  const std::size_t c = dom.center_node();
  CHECK(dom.d(c) >= dom.m0());
  CHECK(dom.d(c) <= 1.0);
  CHECK(dom.d(c) == doctest::Approx(dom.epsilon0() + dom.spec().smoothing_width / 2.0));
}

TEST_CASE("interval gradient sign convention: Dd = -nu") {
  const Domain dom = Domain::build(interval_spec(64));
  // Node at x = h (second node from the left): inward gradient +1, nu = -1.
  const std::size_t i = 1;
  CHECK(dom.coord(i).x == doctest::Approx(1.5 * dom.h()));
  CHECK(dom.grad_d(i).x == doctest::Approx(1.0));
  CHECK(dom.nu(i).x == doctest::Approx(-1.0));
  CHECK(dom.grad_d(i).x == doctest::Approx(-dom.nu(i).x));
}

TEST_CASE("unit gradient on the near-boundary region") {
  const Domain dom = Domain::build(interval_spec(64));
  for (std::size_t i = 0; i < dom.size(); ++i)
    if (dom.boundary_distance(i) < dom.epsilon0())
      CHECK(dom.grad_d(i).norm() == doctest::Approx(1.0));
}

TEST_CASE("disk curvature: laplacian of d equals -1/r") {
  DomainSpec s;
  s.kind = DomainKind::Disk;
  s.extents = {1.0, 1.0};
  s.resolution = 64;
  const Domain dom = Domain::build(s);

  // Closed form at radius ~0.9 (distance 0.1, below the eps0 seam).
  double worst = 0.0;
  int tested = 0;
  for (std::size_t i = 0; i < dom.size(); ++i) {
    const double r = dom.coord(i).norm();
    if (std::abs(r - 0.9) < 0.02) {
      CHECK(dom.boundary_distance(i) == doctest::Approx(1.0 - r));
      worst = std::max(worst, std::abs(dom.laplacian_d(i) - (-1.0 / r)));
      ++tested;
    }
  }
  CHECK(tested > 0);
  CHECK(worst < 1e-12);

  // Cross-check against finite differences of the stored field.
  const double h = dom.h();
  int compared = 0;
  for (std::size_t i = 0; i < dom.size(); ++i) {
    if (!dom.is_interior(i)) continue;
    const double r = dom.coord(i).norm();
    if (std::abs(r - 0.9) > 0.01) continue;
    bool usable = true;
    double fd = 0.0;
    for (int a = 0; a < 2; ++a) {
      const int jm = dom.neighbor(i, a, 0);
      const int jp = dom.neighbor(i, a, 1);
      if (jm < 0 || jp < 0) {
        usable = false;
        break;
      }
      fd += (dom.d(jp) - 2.0 * dom.d(i) + dom.d(jm)) / (h * h);
    }
    if (!usable) continue;
    CHECK(fd == doctest::Approx(dom.laplacian_d(i)).epsilon(0.02));
    ++compared;
  }
  CHECK(compared > 0);
}

TEST_CASE("masks are nested") {
  const Domain dom = Domain::build(interval_spec(64));
  const auto coarse = dom.mask_indices(0.1);
  const auto fine = dom.mask_indices(0.2);
  for (int i : fine) CHECK(dom.in_mask(i, 0.1));
  CHECK(fine.size() < coarse.size());
}

TEST_CASE("configuration guards") {
  DomainSpec s = interval_spec(8);
  CHECK_THROWS_AS(Domain::build(s), ConfigError);  // h = 1/8 >= eps0/4
  s = interval_spec(7);
  CHECK_THROWS_AS(Domain::build(s), ConfigError);  // resolution too small
  s = interval_spec(128);
  s.epsilon0 = 0.45;
  CHECK_THROWS_AS(Domain::build(s), ConfigError);  // cap has no room
}

TEST_CASE("holder extension of a constant is the constant") {
  const Domain dom = Domain::build(interval_spec(64));
  GridField mu(dom, 0.0, 0.25);
  mu.support_delta = 0.25;
  for (std::size_t i = 0; i < dom.size(); ++i)
    if (dom.in_mask(i, 0.25)) mu.v[i] = 3.25;
  const GridField ext = extend_holder(mu, 0.5);
  for (std::size_t i = 0; i < dom.size(); ++i) CHECK(ext.v[i] == doctest::Approx(3.25));
}

TEST_CASE("holder extension of the linear field: brute-force oracle") {
  const Domain dom = Domain::build(interval_spec(64));
  GridField mu(dom, 0.0, 0.25);
  mu.support_delta = 0.25;
  for (std::size_t i = 0; i < dom.size(); ++i)
    if (dom.in_mask(i, 0.25)) mu.v[i] = dom.coord(i).x;

  const GridField ext = extend_holder(mu, 1.0);

  // Oracle: the inf-convolution evaluated directly over all grid pairs.
  const auto mask = dom.mask_indices(0.25);
  double L = 0.0;
  for (std::size_t a = 0; a < mask.size(); ++a)
    for (std::size_t b = a + 1; b < mask.size(); ++b)
      L = std::max(L, std::abs(mu.v[mask[a]] - mu.v[mask[b]]) /
                          std::abs(dom.coord(mask[a]).x - dom.coord(mask[b]).x));
  for (std::size_t i = 0; i < dom.size(); ++i) {
    if (dom.in_mask(i, 0.25)) {
      CHECK(ext.v[i] == mu.v[i]);  // restriction is bit-identical
      continue;
    }
    double expect = 1e300;
    for (int j : mask)
      expect = std::min(expect, mu.v[j] + L * std::abs(dom.coord(i).x - dom.coord(j).x));
    CHECK(ext.v[i] == doctest::Approx(expect));
  }

  // Outside the mask the continuation is linear with slope matching the
  // Holder-1 seminorm: on the left it mirrors, on the right it continues.
  for (std::size_t i = 0; i + 1 < dom.size(); ++i) {
    if (dom.coord(i).x > 0.8) {
      const double slope = (ext.v[i + 1] - ext.v[i]) / dom.h();
      CHECK(slope == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("holder extension is idempotent and preserves the seminorm") {
  const Domain dom = Domain::build(interval_spec(48));
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double alpha = 0.5;

  GridField mu(dom, 0.0, 0.2);
  mu.support_delta = 0.2;
  for (std::size_t i = 0; i < dom.size(); ++i)
    if (dom.in_mask(i, 0.2)) mu.v[i] = std::sin(5.0 * dom.coord(i).x) + 0.3 * u(gen);

  const double semi_inner = holder_seminorm(mu, alpha, 0.2);
  const GridField ext = extend_holder(mu, alpha);
  const double semi_outer = holder_seminorm(ext, alpha, 0.0);
  CHECK(semi_outer == doctest::Approx(semi_inner).epsilon(1e-12));

  GridField again = ext;
  again.support_delta = 0.0;
  const GridField ext2 = extend_holder(again, alpha);
  for (std::size_t i = 0; i < dom.size(); ++i) CHECK(ext2.v[i] == ext.v[i]);
}

TEST_CASE("empty mask is rejected") {
  const Domain dom = Domain::build(interval_spec(64));
  GridField mu(dom, 0.0, 0.0);
  mu.support_delta = 10.0;  // beyond the deepest node
  CHECK_THROWS(extend_holder(mu, 0.5));
}

TEST_CASE("rectangle geometry: corners carry the exact distance off the bisector") {
  DomainSpec s;
  s.kind = DomainKind::Rectangle;
  s.extents = {1.0, 1.0};
  s.resolution = 48;
  const Domain dom = Domain::build(s);
  for (std::size_t i = 0; i < dom.size(); ++i) {
    const Vec2 p = dom.coord(i);
    const double dx = std::min(p.x, 1.0 - p.x);
    const double dy = std::min(p.y, 1.0 - p.y);
    const double exact = std::min(dx, dy);
    CHECK(dom.boundary_distance(i) == doctest::Approx(exact));
    if (std::abs(dx - dy) >= dom.h() && exact < dom.epsilon0())
      CHECK(dom.d(i) == exact);  // smoothing only inside the bisector band
  }
}
