#include "ergmfg/particles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <thread>

#include "ergmfg/errors.hpp"

namespace ergmfg {

void ParticleConfig::validate() const {
  if (dom == nullptr) throw ConfigError("particles: no domain attached");
  if (n_particles < 1) throw ConfigError("particles: n_particles must be positive");
  if (!(horizon > 0.0)) throw ConfigError("particles: horizon must be positive");
  if (!(base_dt > 0.0)) throw ConfigError("particles: base_dt must be positive");
  if (!(safety_band > 0.0)) throw ConfigError("particles: safety_band must be positive");
  if (!(dom->distance_of_point(start) > 0.0))
    throw ConfigError("particles: start position lies outside the domain");
  if (drift != nullptr) {
    double bmax = 0.0;
    for (std::size_t i = 0; i < dom->size(); ++i)
      if (dom->in_mask(i, safety_band)) bmax = std::max(bmax, drift->b.at(i).norm());
    if (!(base_dt * bmax < dom->h()))
      throw ConfigError("particles: CFL sanity fails, base_dt * max|b| over Omega_safety = " +
                        std::to_string(base_dt * bmax) + " must stay below h = " +
                        std::to_string(dom->h()));
  }
}

namespace {

// Deterministic per-particle Gaussian stream (explicit Box-Muller on raw
// 64-bit draws; no library distributions, their output is not pinned down).
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index & 0xffffffffu),
                      static_cast<std::uint32_t>(index >> 32)};
    gen_.seed(seq);
  }

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  double uniform() {  // in (0, 1]
    return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
  }
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

struct WorkerResult {
  long exits = 0;
  double min_distance = std::numeric_limits<double>::infinity();
  std::vector<long> counts;
  long samples = 0;
  bool overflow = false;
};

// SDE drift (-b) at an arbitrary point: multilinear interpolation of the grid
// drift, switched to the asymptotic inward profile below d = 2h.
Vec2 sde_drift(const ParticleConfig& cfg, const Vec2& p, double dist) {
  if (cfg.drift == nullptr) return {0.0, 0.0};
  const Domain& dom = *cfg.dom;
  const double h = dom.h();

  if (dist < 2.0 * h && cfg.certified_constant > 0.0) {
    const Vec2 nu = dom.outward_normal_of_point(p);
    const double f = cfg.certified_constant / std::max(dist, 1e-4 * h);
    return {-f * nu.x, -f * nu.y};  // -b with b = (C/d) nu
  }

  const int i0 = dom.node_at(p);
  if (i0 < 0) return {0.0, 0.0};
  const VectorGridField& b = cfg.drift->b;
  // Gather the surrounding cell centers; fall back to the containing cell
  // when a corner of the stencil is missing.
  const Vec2 c0 = dom.coord(i0);
  auto value_at = [&](int node) -> Vec2 {
    if (node < 0) return b.at(i0);
    return b.at(node);
  };
  if (dom.dim() == 1) {
    const int left = (p.x >= c0.x) ? i0 : dom.neighbor(i0, 0, 0);
    const int right = (p.x >= c0.x) ? dom.neighbor(i0, 0, 1) : i0;
    if (left < 0 || right < 0) {
      const Vec2 v = value_at(i0);
      return {-v.x, -v.y};
    }
    const double w = (p.x - dom.coord(left).x) / h;
    const Vec2 bl = value_at(left), br = value_at(right);
    return {-(bl.x * (1.0 - w) + br.x * w), 0.0};
  }
  const int stepx = (p.x >= c0.x) ? 1 : 0;
  const int stepy = (p.y >= c0.y) ? 1 : 0;
  const int a0 = stepx ? i0 : dom.neighbor(i0, 0, 0);
  const int a1 = stepx ? dom.neighbor(i0, 0, 1) : i0;
  if (a0 < 0 || a1 < 0) {
    const Vec2 v = value_at(i0);
    return {-v.x, -v.y};
  }
  const int n00 = stepy ? a0 : dom.neighbor(a0, 1, 0);
  const int n01 = stepy ? dom.neighbor(a0, 1, 1) : a0;
  const int n10 = stepy ? a1 : dom.neighbor(a1, 1, 0);
  const int n11 = stepy ? dom.neighbor(a1, 1, 1) : a1;
  if (n00 < 0 || n01 < 0 || n10 < 0 || n11 < 0) {
    const Vec2 v = value_at(i0);
    return {-v.x, -v.y};
  }
  const double wx = (p.x - dom.coord(n00).x) / h;
  const double wy = (p.y - dom.coord(n00).y) / h;
  const Vec2 v00 = value_at(n00), v01 = value_at(n01), v10 = value_at(n10), v11 = value_at(n11);
  const double bx = (1 - wx) * ((1 - wy) * v00.x + wy * v01.x) +
                    wx * ((1 - wy) * v10.x + wy * v11.x);
  const double by = (1 - wx) * ((1 - wy) * v00.y + wy * v01.y) +
                    wx * ((1 - wy) * v10.y + wy * v11.y);
  return {-bx, -by};
}

WorkerResult run_range(const ParticleConfig& cfg, double base_dt, int first, int last) {
  const Domain& dom = *cfg.dom;
  WorkerResult res;
  res.counts.assign(dom.size(), 0);
  const long macro_steps = static_cast<long>(std::ceil(cfg.horizon / base_dt));
  const long sample_from = macro_steps / 2;  // time average over the second half

  for (int pi = first; pi < last; ++pi) {
    GaussianStream rng(cfg.seed, static_cast<std::uint64_t>(pi));
    Vec2 x = cfg.start;
    bool alive = true;
    for (long step = 0; step < macro_steps && alive; ++step) {
      double remaining = base_dt;
      while (remaining > 0.0) {
        const double dist = dom.distance_of_point(x);
        const double shrink = std::min(1.0, (dist / cfg.safety_band) * (dist / cfg.safety_band));
        const double dt = std::min(remaining, base_dt * shrink);
        const Vec2 a = sde_drift(cfg, x, dist);
        const double amp = std::sqrt(2.0 * dt);
        x.x += a.x * dt + amp * rng.next();
        if (dom.dim() == 2) x.y += a.y * dt + amp * rng.next();
        if (!std::isfinite(x.x) || !std::isfinite(x.y)) {
          res.overflow = true;
          return res;
        }
        remaining -= dt;
        const double dnew = dom.distance_of_point(x);
        if (dnew <= 0.0) {  // exits are counted, never reflected
          ++res.exits;
          res.min_distance = std::min(res.min_distance, 0.0);
          alive = false;
          break;
        }
        res.min_distance = std::min(res.min_distance, dnew);
      }
      if (alive && step >= sample_from) {
        const int node = dom.node_at(x);
        if (node >= 0) {
          ++res.counts[node];
          ++res.samples;
        }
      }
    }
  }
  return res;
}

}  // namespace

EnsembleReport simulate(const ParticleConfig& cfg) {
  cfg.validate();
  const Domain& dom = *cfg.dom;
  const auto t0 = std::chrono::steady_clock::now();

  double base_dt = cfg.base_dt;
  EnsembleReport rep;
  for (rep.retries = 0; rep.retries <= 3; ++rep.retries) {
    int nthreads = cfg.threads > 0 ? cfg.threads
                                   : static_cast<int>(std::thread::hardware_concurrency());
    nthreads = std::clamp(nthreads, 1, 16);
    nthreads = std::min(nthreads, cfg.n_particles);

    std::vector<WorkerResult> parts(nthreads);
    {
      std::vector<std::thread> pool;
      const int chunk = (cfg.n_particles + nthreads - 1) / nthreads;
      for (int t = 0; t < nthreads; ++t) {
        const int first = t * chunk;
        const int last = std::min(cfg.n_particles, first + chunk);
        pool.emplace_back([&, t, first, last] { parts[t] = run_range(cfg, base_dt, first, last); });
      }
      for (auto& th : pool) th.join();
    }

    bool overflow = false;
    for (const auto& p : parts) overflow = overflow || p.overflow;
    if (overflow) {  // step-size failure: halve and flag
      base_dt *= 0.5;
      continue;
    }

    rep.exit_count = 0;
    rep.min_distance = std::numeric_limits<double>::infinity();
    rep.histogram_samples = 0;
    std::vector<long> counts(dom.size(), 0);
    for (const auto& p : parts) {
      rep.exit_count += p.exits;
      rep.min_distance = std::min(rep.min_distance, p.min_distance);
      rep.histogram_samples += p.samples;
      for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += p.counts[i];
    }
    rep.histogram.assign(dom.size(), 0.0);
    if (rep.histogram_samples > 0) {
      const double norm = 1.0 / (static_cast<double>(rep.histogram_samples) * dom.cell_volume());
      for (std::size_t i = 0; i < counts.size(); ++i)
        rep.histogram[i] = static_cast<double>(counts[i]) * norm;
    }
    if (cfg.reference != nullptr) {
      double tv = 0.0;
      for (std::size_t i = 0; i < dom.size(); ++i)
        tv += std::abs(rep.histogram[i] - cfg.reference->m.v[i]);
      rep.tv_distance = 0.5 * tv * dom.cell_volume();
    }
    rep.effective_dt = base_dt;
    rep.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
  }
  throw SolverError("particles: repeated overflow after halving base_dt three times", base_dt);
}

double brownian_exit_probability(double x0, double L, double T) {
  // Survival series for dX = sqrt(2) dB in (0, L): generator is d^2/dx^2.
  double survival = 0.0;
  for (int k = 1; k <= 399; k += 2) {
    const double lam = (k * M_PI / L) * (k * M_PI / L);
    survival += 4.0 / (k * M_PI) * std::sin(k * M_PI * x0 / L) * std::exp(-lam * T);
  }
  return 1.0 - survival;
}

}  // namespace ergmfg
