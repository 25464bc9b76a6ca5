#pragma once

#include <string>
#include <vector>

#include "ergmfg/domain.hpp"
#include "ergmfg/hjb.hpp"

namespace ergmfg {

/// Right-hand-side factory: zero | const:<v> | sinpi:<amplitude>.
GridField make_rhs(const Domain& dom, const std::string& name);
double rhs_sup_norm(const Domain& dom, const std::string& name);

struct SweepPlan {
  DomainSpec base_domain;            // resolution is overridden per entry
  std::vector<double> q_values = {1.5};
  std::vector<int> resolutions = {128, 256, 512};
  std::vector<std::string> g_family = {"zero"};

  void validate() const;
};

struct SweepEntry {
  double q = 0.0;
  int resolution = 0;
  std::string g_name;
  double g_norm = 0.0;
  double rho = 0.0;
  AsymptoticsReport report;
};

struct UniformityRow {
  double q = 0.0;
  int resolution = 0;
  double d = 0.0;                       // band distance
  std::vector<double> deviation_per_g;  // |(Du.nu) d^{1/(q-1)} - target|
  double worst = 0.0;
};

struct SweepReport {
  std::vector<SweepEntry> entries;
  std::vector<UniformityRow> uniformity;
};

/// Resolution/parameter sweep of the near-boundary fits, with the worst-case
/// deviation per band across the g family (the uniform-in-g envelope).
SweepReport run_sweep(const SweepPlan& plan);

}  // namespace ergmfg
