#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace ergmfg {

struct Vec2 {
  double x = 0.0, y = 0.0;
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm() const;
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
};

enum class DomainKind { Interval, Rectangle, Disk };

DomainKind domain_kind_from_string(const std::string& s);
std::string to_string(DomainKind k);

/// Geometry request. `resolution` is the cell count along the first axis;
/// nodes sit at cell centers so the outermost layer is at distance h/2.
struct DomainSpec {
  DomainKind kind = DomainKind::Interval;
  std::array<double, 2> extents = {1.0, 1.0};  // interval length | rectangle sides | disk radius in [0]
  int resolution = 128;
  double epsilon0 = 0.2;
  double smoothing_width = 0.2;

  void validate() const;  // throws ConfigError
};

class Domain;

/// Scalar values on the nodes of a Domain. `support_delta` declares the mask
/// the values are meaningful on: nodes with boundary_distance > support_delta.
/// Entries outside the mask are kept at zero.
struct GridField {
  const Domain* dom = nullptr;
  double support_delta = 0.0;
  std::vector<double> v;

  GridField() = default;
  explicit GridField(const Domain& d, double fill = 0.0, double delta = 0.0);
  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }
};

/// Vector values on the nodes of a Domain (y component unused in 1D).
struct VectorGridField {
  const Domain* dom = nullptr;
  double support_delta = 0.0;
  std::vector<double> vx, vy;

  VectorGridField() = default;
  explicit VectorGridField(const Domain& d, double delta = 0.0);
  Vec2 at(std::size_t i) const { return {vx[i], vy[i]}; }
};

/// Discretized geometry: uniform cell-centered grid carrying the boundary
/// distance, its smooth capped extension d together with Dd and Laplacian(d),
/// outward normals of the nearest boundary point, and the nested subdomain
/// masks. Immutable after construction and safe to share across threads.
class Domain {
 public:
  static Domain build(const DomainSpec& spec);

  const DomainSpec& spec() const { return spec_; }
  int dim() const { return dim_; }
  double h() const { return h_; }
  std::size_t size() const { return coords_.size(); }
  double cell_volume() const;
  double epsilon0() const { return spec_.epsilon0; }
  double m0() const { return spec_.epsilon0; }
  double d_cap() const { return cap_; }
  double max_distance() const { return max_dist_; }

  const Vec2& coord(std::size_t i) const { return coords_[i]; }
  /// Exact distance to the boundary (used for masks and weighted norms).
  double boundary_distance(std::size_t i) const { return dist_[i]; }
  /// The C2 extension of the distance: equals the exact distance below
  /// epsilon0 and flattens to a constant cap above it.
  double d(std::size_t i) const { return d_[i]; }
  const Vec2& grad_d(std::size_t i) const { return grad_d_[i]; }
  double laplacian_d(std::size_t i) const { return lap_d_[i]; }
  /// Outward unit normal at the nearest boundary point.
  const Vec2& nu(std::size_t i) const { return nu_[i]; }

  /// Neighbor of node i along `axis` in direction `dir` (0 = minus, 1 = plus);
  /// -1 when the neighbor cell lies outside the domain.
  int neighbor(std::size_t i, int axis, int dir) const { return nbr_[i][2 * axis + dir]; }
  /// True iff every neighbor exists; the complement is the outermost layer.
  bool is_interior(std::size_t i) const { return interior_[i]; }

  bool in_mask(std::size_t i, double delta) const { return dist_[i] > delta; }
  std::vector<int> mask_indices(double delta) const;
  /// Discrete measure of the mask: (#cells) * h^dim.
  double mask_volume(double delta) const;

  /// Midpoint-rule integral of f over the mask {distance > delta}.
  double integrate(const GridField& f, double delta = 0.0) const;

  /// Node nearest to the geometric center (always inside Omega_eps0).
  std::size_t center_node() const { return center_node_; }

  /// Continuous geometry helpers (used by the particle integrator).
  double distance_of_point(const Vec2& p) const;
  Vec2 outward_normal_of_point(const Vec2& p) const;
  /// Flattened lattice index of the cell containing p, or -1 if outside.
  int node_at(const Vec2& p) const;

 private:
  DomainSpec spec_;
  int dim_ = 1;
  double h_ = 0.0;
  double cap_ = 0.0;
  double max_dist_ = 0.0;
  int nx_ = 0, ny_ = 1;
  Vec2 origin_;  // lower-left corner of the lattice
  std::vector<Vec2> coords_;
  std::vector<double> dist_;
  std::vector<double> d_;
  std::vector<Vec2> grad_d_;
  std::vector<double> lap_d_;
  std::vector<Vec2> nu_;
  std::vector<std::array<int, 4>> nbr_;
  std::vector<std::uint8_t> interior_;
  std::vector<int> lattice_to_node_;  // -1 for lattice cells outside the domain
  std::size_t center_node_ = 0;
};

/// Modulus-preserving extension of a field from its support mask to the whole
/// domain: the inf-convolution  min_y { mu(y) + L |x-y|^alpha }  with L the
/// discrete Holder-alpha seminorm of mu over its mask. Restriction to the
/// mask is bit-identical to mu.
GridField extend_holder(const GridField& mu, double alpha);

/// Discrete Holder-alpha seminorm over the mask {distance > delta}, by
/// exhaustive pairwise maximum.
double holder_seminorm(const GridField& f, double alpha, double delta);

}  // namespace ergmfg
