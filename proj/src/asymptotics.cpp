#include "ergmfg/asymptotics.hpp"

#include <cmath>
#include <map>

#include "ergmfg/errors.hpp"

namespace ergmfg {

namespace {

double parse_suffix(const std::string& name, const std::string& prefix) {
  const std::string tail = name.substr(prefix.size());
  try {
    std::size_t pos = 0;
    const double v = std::stod(tail, &pos);
    if (pos != tail.size()) throw std::invalid_argument(tail);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("rhs '" + name + "': cannot parse the numeric suffix");
  }
}

}  // namespace

GridField make_rhs(const Domain& dom, const std::string& name) {
  GridField g(dom);
  if (name == "zero" || name.empty()) return g;
  if (name.rfind("const:", 0) == 0) {
    const double c = parse_suffix(name, "const:");
    for (auto& v : g.v) v = c;
    return g;
  }
  if (name.rfind("sinpi:", 0) == 0) {
    const double amp = parse_suffix(name, "sinpi:");
    const auto& spec = dom.spec();
    for (std::size_t i = 0; i < dom.size(); ++i) {
      const Vec2 p = dom.coord(i);
      double val = 0.0;
      switch (spec.kind) {
        case DomainKind::Interval: val = std::sin(M_PI * p.x / spec.extents[0]); break;
        case DomainKind::Rectangle:
          val = std::sin(M_PI * p.x / spec.extents[0]) * std::sin(M_PI * p.y / spec.extents[1]);
          break;
        case DomainKind::Disk: {
          const double r = p.norm() / spec.extents[0];
          val = std::cos(0.5 * M_PI * r);
          break;
        }
      }
      g.v[i] = amp * val;
    }
    return g;
  }
  throw ConfigError("unknown rhs '" + name + "' (expected zero | const:<v> | sinpi:<amp>)");
}

double rhs_sup_norm(const Domain& dom, const std::string& name) {
  const GridField g = make_rhs(dom, name);
  double s = 0.0;
  for (double v : g.v) s = std::max(s, std::abs(v));
  return s;
}

void SweepPlan::validate() const {
  if (q_values.empty()) throw ConfigError("sweep: empty q list");
  for (double q : q_values)
    if (!(q > 1.0 && q <= 2.0)) throw ConfigError("sweep: q values must lie in (1,2]");
  if (resolutions.size() < 3)
    throw ConfigError("sweep: need at least 3 resolutions in geometric progression");
  const double ratio = static_cast<double>(resolutions[1]) / resolutions[0];
  if (!(ratio > 1.0)) throw ConfigError("sweep: resolutions must increase");
  for (std::size_t k = 1; k + 1 < resolutions.size(); ++k) {
    const double r = static_cast<double>(resolutions[k + 1]) / resolutions[k];
    if (std::abs(r - ratio) > 1e-9)
      throw ConfigError("sweep: resolutions must form a geometric progression");
  }
  if (g_family.empty()) throw ConfigError("sweep: empty g family");
}

SweepReport run_sweep(const SweepPlan& plan) {
  plan.validate();
  SweepReport rep;

  for (double q : plan.q_values) {
    for (int res : plan.resolutions) {
      DomainSpec dspec = plan.base_domain;
      dspec.resolution = res;
      const Domain dom = Domain::build(dspec);

      std::vector<AsymptoticsReport> family_reports;
      for (const std::string& gname : plan.g_family) {
        HJBProblem p;
        p.q = q;
        p.dom = &dom;
        p.g = make_rhs(dom, gname);
        p.x0 = dom.center_node();
        const ValueSolution sol = solve_ergodic(p);

        SweepEntry entry;
        entry.q = q;
        entry.resolution = res;
        entry.g_name = gname;
        entry.g_norm = rhs_sup_norm(dom, gname);
        entry.rho = sol.rho;
        entry.report = fit_boundary_asymptotics(sol);
        rep.entries.push_back(std::move(entry));
        family_reports.push_back(rep.entries.back().report);
      }

      // Worst-case deviation of the scaled gradient per band across the g
      // family, against the closed-form limit.
      const double target = gradient_limit_constant(q);
      std::map<double, UniformityRow> rows;
      for (std::size_t gi = 0; gi < family_reports.size(); ++gi) {
        for (const auto& band : family_reports[gi].bands) {
          if (band.d > dom.epsilon0() / 2.0 || band.d < 2.0 * dom.h()) continue;
          auto& row = rows[band.d];
          row.q = q;
          row.resolution = res;
          row.d = band.d;
          row.deviation_per_g.resize(family_reports.size(), 0.0);
          row.deviation_per_g[gi] = std::abs(band.grad_scaled - target);
        }
      }
      for (auto& [d, row] : rows) {
        row.worst = 0.0;
        for (double dev : row.deviation_per_g) row.worst = std::max(row.worst, dev);
        rep.uniformity.push_back(row);
      }
    }
  }
  return rep;
}

}  // namespace ergmfg
