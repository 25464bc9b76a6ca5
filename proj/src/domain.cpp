#include "ergmfg/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ergmfg/errors.hpp"

namespace ergmfg {

double Vec2::norm() const { return std::sqrt(x * x + y * y); }

DomainKind domain_kind_from_string(const std::string& s) {
  if (s == "interval") return DomainKind::Interval;
  if (s == "rectangle") return DomainKind::Rectangle;
  if (s == "disk") return DomainKind::Disk;
  throw ConfigError("unknown domain kind '" + s + "' (expected interval | rectangle | disk)");
}

std::string to_string(DomainKind k) {
  switch (k) {
    case DomainKind::Interval: return "interval";
    case DomainKind::Rectangle: return "rectangle";
    case DomainKind::Disk: return "disk";
  }
  return "?";
}

void DomainSpec::validate() const {
  if (resolution < 8) throw ConfigError("domain resolution must be at least 8 nodes per axis");
  if (!(epsilon0 > 0.0 && epsilon0 < 1.0)) throw ConfigError("epsilon0 must lie in (0,1)");
  if (!(smoothing_width > 0.0)) throw ConfigError("smoothing_width must be positive");
  if (!(extents[0] > 0.0)) throw ConfigError("domain extent must be positive");
  if (kind == DomainKind::Rectangle && !(extents[1] > 0.0))
    throw ConfigError("rectangle needs two positive extents");

  const double h = (kind == DomainKind::Disk) ? 2.0 * extents[0] / resolution
                                              : extents[0] / resolution;
  if (!(h < epsilon0 / 4.0))
    throw ConfigError("resolution too coarse relative to epsilon0: need h < epsilon0/4, got h=" +
                      std::to_string(h));

  double interior_reach = 0.0;  // largest boundary distance in the domain
  switch (kind) {
    case DomainKind::Interval: interior_reach = extents[0] / 2.0; break;
    case DomainKind::Rectangle: interior_reach = std::min(extents[0], extents[1]) / 2.0; break;
    case DomainKind::Disk: interior_reach = extents[0]; break;
  }
  if (!(epsilon0 + smoothing_width <= interior_reach))
    throw ConfigError("epsilon0 + smoothing_width exceeds the interior reach of the domain; "
                      "the distance cap has no room to flatten");
  if (epsilon0 + smoothing_width / 2.0 > 1.0)
    throw ConfigError("distance cap epsilon0 + smoothing_width/2 must not exceed 1");
}

GridField::GridField(const Domain& d, double fill, double delta)
    : dom(&d), support_delta(delta), v(d.size(), 0.0) {
  if (fill != 0.0) {
    for (std::size_t i = 0; i < v.size(); ++i)
      if (d.in_mask(i, delta)) v[i] = fill;
  }
}

VectorGridField::VectorGridField(const Domain& d, double delta)
    : dom(&d), support_delta(delta), vx(d.size(), 0.0), vy(d.size(), 0.0) {}

namespace {

// Descending quintic smoothstep and its derivative: P(0)=1, P(1)=0 with two
// vanishing derivatives at both ends.
double smoothstep_down(double s) { return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s); }
double smoothstep_down_d(double s) { return -30.0 * s * s * (1.0 - 2.0 * s + s * s); }
// Integral of P over [0, s].
double smoothstep_down_int(double s) {
  const double s4 = s * s * s * s;
  return s - s4 * (2.5 - 3.0 * s + s * s);
}

// Cap profile S: identity below eps0, quintic-smoothed flattening to the
// constant eps0 + w/2 above eps0 + w. Returns {S, S', S''}.
struct CapEval {
  double value, d1, d2;
};
CapEval cap_profile(double t, double eps0, double w) {
  if (t <= eps0) return {t, 1.0, 0.0};
  const double s = (t - eps0) / w;
  if (s >= 1.0) return {eps0 + 0.5 * w, 0.0, 0.0};
  return {eps0 + w * smoothstep_down_int(s), smoothstep_down(s), smoothstep_down_d(s) / w};
}

// C2 smooth minimum with blending band w: exact min when |a-b| >= w.
// Returns {value, d/da, d/db, d2/da2, d2/db2, d2/dadb}.
struct SoftMinEval {
  double value, da, db, daa, dbb, dab;
};
SoftMinEval soft_min(double a, double b, double w) {
  const double u = a - b;
  if (std::abs(u) >= w) {
    if (a <= b) return {a, 1.0, 0.0, 0.0, 0.0, 0.0};
    return {b, 0.0, 1.0, 0.0, 0.0, 0.0};
  }
  // Smooth |u| = w * A(u/w), A(t) = 3/8 + 3/4 t^2 - 1/8 t^4 on |t|<1.
  const double t = u / w;
  const double A = 0.375 + 0.75 * t * t - 0.125 * t * t * t * t;
  const double A1 = 1.5 * t - 0.5 * t * t * t;
  const double A2 = (1.5 - 1.5 * t * t) / w;
  const double value = 0.5 * (a + b) - 0.5 * w * A;
  const double da = 0.5 - 0.5 * A1;
  const double db = 0.5 + 0.5 * A1;
  const double dsec = -0.5 * A2;
  return {value, da, db, dsec, dsec, -dsec};
}

}  // namespace

double Domain::cell_volume() const { return dim_ == 1 ? h_ : h_ * h_; }

Domain Domain::build(const DomainSpec& spec) {
  spec.validate();
  Domain dom;
  dom.spec_ = spec;
  const double eps0 = spec.epsilon0;
  const double w = spec.smoothing_width;
  dom.cap_ = eps0 + 0.5 * w;

  if (spec.kind == DomainKind::Interval) {
    dom.dim_ = 1;
    dom.nx_ = spec.resolution;
    dom.ny_ = 1;
    dom.h_ = spec.extents[0] / spec.resolution;
    dom.origin_ = {0.0, 0.0};
  } else if (spec.kind == DomainKind::Rectangle) {
    dom.dim_ = 2;
    dom.h_ = spec.extents[0] / spec.resolution;
    dom.nx_ = spec.resolution;
    const double ny_real = spec.extents[1] / dom.h_;
    dom.ny_ = static_cast<int>(std::lround(ny_real));
    if (std::abs(ny_real - dom.ny_) > 1e-9 || dom.ny_ < 8)
      throw ConfigError("rectangle extents are not commensurate with the uniform spacing");
    dom.origin_ = {0.0, 0.0};
  } else {  // Disk
    dom.dim_ = 2;
    const double R = spec.extents[0];
    dom.h_ = 2.0 * R / spec.resolution;
    dom.nx_ = dom.ny_ = spec.resolution;
    dom.origin_ = {-R, -R};
  }

  const double h = dom.h_;
  const double Lx = spec.extents[0], Ly = spec.extents[1];
  const double R = spec.extents[0];
  dom.lattice_to_node_.assign(static_cast<std::size_t>(dom.nx_) * dom.ny_, -1);

  for (int j = 0; j < dom.ny_; ++j) {
    for (int i = 0; i < dom.nx_; ++i) {
      const Vec2 p{dom.origin_.x + (i + 0.5) * h, dom.origin_.y + (j + 0.5) * h};
      double dist;
      if (spec.kind == DomainKind::Disk) {
        dist = R - p.norm();
        if (dist <= 0.0) continue;
      } else if (spec.kind == DomainKind::Interval) {
        dist = std::min(p.x, Lx - p.x);
      } else {
        dist = std::min(std::min(p.x, Lx - p.x), std::min(p.y, Ly - p.y));
      }
      dom.lattice_to_node_[static_cast<std::size_t>(j) * dom.nx_ + i] =
          static_cast<int>(dom.coords_.size());
      dom.coords_.push_back(p);
      dom.dist_.push_back(dist);
    }
  }

  const std::size_t n = dom.coords_.size();
  dom.d_.resize(n);
  dom.grad_d_.resize(n);
  dom.lap_d_.resize(n);
  dom.nu_.resize(n);
  dom.nbr_.resize(n);
  dom.interior_.assign(n, 1);
  dom.max_dist_ = 0.0;

  for (std::size_t k = 0; k < n; ++k) {
    const Vec2 p = dom.coords_[k];
    dom.max_dist_ = std::max(dom.max_dist_, dom.dist_[k]);

    // Pre-extension distance together with its first/second derivatives.
    double pre, pre_gx = 0.0, pre_gy = 0.0, pre_lap = 0.0;
    if (spec.kind == DomainKind::Interval) {
      const double sgn = (p.x <= Lx / 2.0) ? 1.0 : -1.0;
      pre = std::min(p.x, Lx - p.x);
      pre_gx = sgn;
      dom.nu_[k] = {-sgn, 0.0};
    } else if (spec.kind == DomainKind::Disk) {
      const double r = p.norm();
      pre = R - r;
      pre_gx = -p.x / r;
      pre_gy = -p.y / r;
      pre_lap = -1.0 / r;
      dom.nu_[k] = {p.x / r, p.y / r};
    } else {
      const double dx = std::min(p.x, Lx - p.x);
      const double dy = std::min(p.y, Ly - p.y);
      const double sx = (p.x <= Lx / 2.0) ? 1.0 : -1.0;
      const double sy = (p.y <= Ly / 2.0) ? 1.0 : -1.0;
      // Corner bisectors carry a kink of the exact distance; the smooth min
      // over a band of one spacing stands in for the C2 boundary the analysis
      // assumes.
      const SoftMinEval sm = soft_min(dx, dy, h);
      pre = sm.value;
      pre_gx = sm.da * sx;
      pre_gy = sm.db * sy;
      pre_lap = sm.daa + sm.dbb;  // |grad dx| = |grad dy| = 1, cross term 0
      if (dx <= dy)
        dom.nu_[k] = {-sx, 0.0};
      else
        dom.nu_[k] = {0.0, -sy};
    }

    const CapEval cap = cap_profile(pre, eps0, w);
    dom.d_[k] = cap.value;
    if (cap.d1 == 0.0 && cap.d2 == 0.0) {
      dom.grad_d_[k] = {0.0, 0.0};
      dom.lap_d_[k] = 0.0;
    } else {
      dom.grad_d_[k] = {cap.d1 * pre_gx, cap.d1 * pre_gy};
      const double g2 = pre_gx * pre_gx + pre_gy * pre_gy;
      dom.lap_d_[k] = cap.d2 * g2 + cap.d1 * pre_lap;
    }
  }

  // Neighbor table on the lattice; missing neighbors mark the outer layer.
  auto lattice = [&](int i, int j) -> int {
    if (i < 0 || j < 0 || i >= dom.nx_ || j >= dom.ny_) return -1;
    return dom.lattice_to_node_[static_cast<std::size_t>(j) * dom.nx_ + i];
  };
  for (int j = 0; j < dom.ny_; ++j) {
    for (int i = 0; i < dom.nx_; ++i) {
      const int k = lattice(i, j);
      if (k < 0) continue;
      auto& nb = dom.nbr_[k];
      nb[0] = lattice(i - 1, j);
      nb[1] = lattice(i + 1, j);
      if (dom.dim_ == 2) {
        nb[2] = lattice(i, j - 1);
        nb[3] = lattice(i, j + 1);
      } else {
        nb[2] = nb[3] = k;  // no transverse axis in 1D
      }
      const int naxes = 2 * dom.dim_;
      for (int a = 0; a < naxes; ++a)
        if (nb[a] < 0) dom.interior_[k] = 0;
    }
  }

  // Center node: maximal boundary distance, ties broken towards the centroid.
  Vec2 centroid{0.0, 0.0};
  for (const auto& p : dom.coords_) centroid = centroid + p;
  centroid = centroid * (1.0 / static_cast<double>(n));
  double best = -1.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double score = dom.dist_[k] - 1e-9 * (dom.coords_[k] - centroid).norm();
    if (score > best) {
      best = score;
      dom.center_node_ = k;
    }
  }
  if (!(dom.dist_[dom.center_node_] > eps0))
    throw ConfigError("domain has no interior node inside Omega_eps0");
  return dom;
}

std::vector<int> Domain::mask_indices(double delta) const {
  std::vector<int> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i)
    if (dist_[i] > delta) out.push_back(static_cast<int>(i));
  return out;
}

double Domain::mask_volume(double delta) const {
  std::size_t c = 0;
  for (double d : dist_)
    if (d > delta) ++c;
  return static_cast<double>(c) * cell_volume();
}

double Domain::integrate(const GridField& f, double delta) const {
  double s = 0.0;
  for (std::size_t i = 0; i < size(); ++i)
    if (dist_[i] > delta) s += f.v[i];
  return s * cell_volume();
}

double Domain::distance_of_point(const Vec2& p) const {
  switch (spec_.kind) {
    case DomainKind::Interval: return std::min(p.x, spec_.extents[0] - p.x);
    case DomainKind::Rectangle:
      return std::min(std::min(p.x, spec_.extents[0] - p.x),
                      std::min(p.y, spec_.extents[1] - p.y));
    case DomainKind::Disk: return spec_.extents[0] - p.norm();
  }
  return 0.0;
}

Vec2 Domain::outward_normal_of_point(const Vec2& p) const {
  switch (spec_.kind) {
    case DomainKind::Interval: return {(p.x <= spec_.extents[0] / 2.0) ? -1.0 : 1.0, 0.0};
    case DomainKind::Rectangle: {
      const double dx0 = p.x, dx1 = spec_.extents[0] - p.x;
      const double dy0 = p.y, dy1 = spec_.extents[1] - p.y;
      const double m = std::min(std::min(dx0, dx1), std::min(dy0, dy1));
      if (m == dx0) return {-1.0, 0.0};
      if (m == dx1) return {1.0, 0.0};
      if (m == dy0) return {0.0, -1.0};
      return {0.0, 1.0};
    }
    case DomainKind::Disk: {
      const double r = p.norm();
      if (r < 1e-300) return {1.0, 0.0};
      return {p.x / r, p.y / r};
    }
  }
  return {1.0, 0.0};
}

int Domain::node_at(const Vec2& p) const {
  const int i = static_cast<int>(std::floor((p.x - origin_.x) / h_));
  const int j = dim_ == 2 ? static_cast<int>(std::floor((p.y - origin_.y) / h_)) : 0;
  if (i < 0 || j < 0 || i >= nx_ || j >= ny_) return -1;
  return lattice_to_node_[static_cast<std::size_t>(j) * nx_ + i];
}

double holder_seminorm(const GridField& f, double alpha, double delta) {
  const Domain& dom = *f.dom;
  const std::vector<int> idx = dom.mask_indices(delta);
  double best = 0.0;
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      const double num = std::abs(f.v[idx[a]] - f.v[idx[b]]);
      if (num == 0.0) continue;
      const double den = std::pow((dom.coord(idx[a]) - dom.coord(idx[b])).norm(), alpha);
      best = std::max(best, num / den);
    }
  }
  return best;
}

GridField extend_holder(const GridField& mu, double alpha) {
  if (mu.dom == nullptr) throw Error("extend_holder: field has no domain");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("holder alpha must lie in (0,1]");
  const Domain& dom = *mu.dom;
  const std::vector<int> mask = dom.mask_indices(mu.support_delta);
  if (mask.empty()) throw Error("extend_holder: empty support mask");
  for (int i : mask)
    if (!std::isfinite(mu.v[i])) throw Error("extend_holder: non-finite value inside the mask");

  const double L = holder_seminorm(mu, alpha, mu.support_delta);
  GridField out(dom, 0.0, 0.0);
  for (std::size_t i = 0; i < dom.size(); ++i) {
    if (dom.in_mask(i, mu.support_delta)) {
      out.v[i] = mu.v[i];
      continue;
    }
    double m = std::numeric_limits<double>::infinity();
    for (int jj : mask) {
      const double r = (dom.coord(i) - dom.coord(jj)).norm();
      m = std::min(m, mu.v[jj] + L * std::pow(r, alpha));
    }
    out.v[i] = m;
  }
  return out;
}

}  // namespace ergmfg
