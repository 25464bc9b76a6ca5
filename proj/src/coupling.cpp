#include "ergmfg/coupling.hpp"

#include <algorithm>
#include <cmath>

#include "ergmfg/errors.hpp"

namespace ergmfg {

Coupling Coupling::gaussian_kernel(const Domain& dom, double bandwidth, bool monotone) {
  if (!(bandwidth > 0.0)) throw ConfigError("coupling: kernel bandwidth must be positive");
  if (dom.size() > 6000)
    throw ConfigError("coupling: the dense kernel needs O(n^2) storage; "
                      "reduce the resolution (n = " + std::to_string(dom.size()) + ")");
  Coupling c;
  c.kind_ = CouplingKind::NonlocalKernel;
  c.dom_ = &dom;
  c.monotone_ = monotone;
  c.name_ = "gaussian:" + std::to_string(bandwidth);

  const std::size_t n = dom.size();
  const double vol = dom.cell_volume();
  std::vector<double> raw(n * n);
  std::vector<double> z(n, 0.0);  // truncated kernel mass per node
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double r = (dom.coord(i) - dom.coord(j)).norm();
      raw[i * n + j] = std::exp(-0.5 * (r / bandwidth) * (r / bandwidth));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += raw[i * n + j];
    z[i] = s * vol;
  }
  // Symmetric renormalization K / sqrt(Z(x) Z(y)): keeps the kernel positive
  // semidefinite while restoring the boundary-truncated mass.
  c.kernel_.resize(n * n);
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      c.kernel_[i * n + j] = raw[i * n + j] / std::sqrt(z[i] * z[j]);
      peak = std::max(peak, c.kernel_[i * n + j]);
    }
  }
  c.bound_ = peak;      // |F(x;m)| <= peak * ||m||_L1
  c.lipschitz_ = peak;  // ||F(m1)-F(m2)||_inf <= peak * ||m1-m2||_L1
  return c;
}

Coupling Coupling::local(const Domain& dom, const std::string& name) {
  Coupling c;
  c.kind_ = CouplingKind::LocalFunction;
  c.dom_ = &dom;
  c.name_ = name;
  if (name == "tanh") {
    c.f_ = [](double t) { return std::tanh(t); };
    c.bound_ = 1.0;
    c.monotone_ = true;
  } else if (name == "atan") {
    c.f_ = [](double t) { return std::atan(t); };
    c.bound_ = std::atan(std::numeric_limits<double>::infinity());
    c.monotone_ = true;
  } else if (name == "neg_tanh") {
    c.f_ = [](double t) { return -std::tanh(t); };
    c.bound_ = 1.0;
    c.monotone_ = false;  // decreasing: the control case outside (F3)
  } else {
    throw ConfigError("coupling: unknown local profile '" + name +
                      "' (expected tanh | atan | neg_tanh | table:<path>)");
  }
  c.lipschitz_ = 0.0;  // the (F1) modulus is a kernel notion
  return c;
}

Coupling Coupling::local_table(const Domain& dom, std::vector<std::pair<double, double>> table,
                               bool monotone) {
  if (table.size() < 2) throw ConfigError("coupling: table needs at least two rows");
  std::sort(table.begin(), table.end());
  if (monotone) {
    for (std::size_t i = 1; i < table.size(); ++i)
      if (table[i].second < table[i - 1].second)
        throw ConfigError("coupling: monotone flag set but the tabulated map decreases");
  }
  Coupling c;
  c.kind_ = CouplingKind::LocalFunction;
  c.dom_ = &dom;
  c.monotone_ = monotone;
  c.name_ = "table";
  double bound = 0.0;
  for (const auto& [x, y] : table) bound = std::max(bound, std::abs(y));
  c.bound_ = bound;
  c.f_ = [table](double t) {
    if (t <= table.front().first) return table.front().second;
    if (t >= table.back().first) return table.back().second;
    for (std::size_t i = 1; i < table.size(); ++i) {
      if (t <= table[i].first) {
        const auto [x0, y0] = table[i - 1];
        const auto [x1, y1] = table[i];
        const double w = (t - x0) / (x1 - x0);
        return y0 + w * (y1 - y0);
      }
    }
    return table.back().second;
  };
  return c;
}

GridField Coupling::evaluate(const Density& m) const {
  if (m.m.dom != dom_) throw ConfigError("coupling: density lives on a different domain");
  const Domain& dom = *dom_;
  const GridField full =
      (m.m.support_delta > 0.0) ? extend_holder(m.m, holder_alpha_) : m.m;

  GridField out(dom);
  if (kind_ == CouplingKind::LocalFunction) {
    for (std::size_t i = 0; i < dom.size(); ++i) out.v[i] = f_(full.v[i]);
    return out;
  }
  const std::size_t n = dom.size();
  const double vol = dom.cell_volume();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    const double* row = kernel_.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) s += row[j] * full.v[j];
    out.v[i] = s * vol;
  }
  return out;
}

double Coupling::monotonicity_probe(const Density& m1, const Density& m2) const {
  if (m1.m.dom != m2.m.dom || m1.m.support_delta != m2.m.support_delta)
    throw ConfigError("monotonicity_probe: densities must share one mask");
  const Domain& dom = *m1.m.dom;
  const GridField f1 = evaluate(m1);
  const GridField f2 = evaluate(m2);
  double acc = 0.0;
  for (std::size_t i = 0; i < dom.size(); ++i) {
    if (!dom.in_mask(i, m1.m.support_delta)) continue;
    acc += (f1.v[i] - f2.v[i]) * (m1.m.v[i] - m2.m.v[i]);
  }
  return acc * dom.cell_volume();
}

}  // namespace ergmfg
