#include "ergmfg/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "ergmfg/asymptotics.hpp"
#include "ergmfg/config.hpp"
#include "ergmfg/coupling.hpp"
#include "ergmfg/domain.hpp"
#include "ergmfg/errors.hpp"
#include "ergmfg/hjb.hpp"
#include "ergmfg/io.hpp"
#include "ergmfg/kfp.hpp"
#include "ergmfg/mfg.hpp"
#include "ergmfg/particles.hpp"

namespace ergmfg {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Logger {
  int level = 1;  // 0 quiet, 1 info, 2 debug
  void info(const std::string& msg) const {
    if (level >= 1) std::fprintf(stderr, "[info] %s\n", msg.c_str());
  }
  void debug(const std::string& msg) const {
    if (level >= 2) std::fprintf(stderr, "[debug] %s\n", msg.c_str());
  }
};

int log_level_from(const std::string& s) {
  if (s == "quiet") return 0;
  if (s == "info") return 1;
  if (s == "debug") return 2;
  throw ConfigError("unknown log level '" + s + "' (expected quiet | info | debug)");
}

/// Every tunable of a run, resolved against defaults. The echo of this struct
/// is the run's reproducibility record.
struct RunConfig {
  DomainSpec domain;

  // [hjb]
  double q = 1.5;
  std::string rhs = "zero";
  std::string x0 = "center";
  std::string boundary_layer = "profile";
  std::vector<double> lambda_schedule = {1e-1, 1e-2, 1e-3, 1e-4};
  double newton_tol = 1e-12;
  double rho_cross_tol = 1e-4;
  int max_newton_iter = 200;

  // [kfp]
  std::string kfp_drift = "solve";
  std::vector<double> continuation;  // empty = dyadic from 0.1 down to 2h
  double lyapunov_C = 0.0;           // 0 = q/(q-1)
  double lyapunov_eps = 0.0;         // 0 = (C-1)/2

  // [coupling]
  std::string coupling_kind = "local";
  std::string local_f = "tanh";
  double kernel_bandwidth = 0.1;
  bool monotone = true;

  // [mfg]
  double gamma = 3.0;
  std::vector<double> delta_schedule = {0.1, 0.05, 0.025};
  double theta = 0.5;
  double fp_tolerance = 1e-8;
  int max_iterations = 200;
  double holder_alpha = 0.5;

  // [particles]
  int n_particles = 10000;
  double horizon = 10.0;
  double base_dt = 1e-4;
  double safety_band = 0.05;
  std::string particle_drift = "solve";
  int threads = 0;

  // [sweep]
  std::vector<double> q_values = {1.5};
  std::vector<int> resolutions = {128, 256, 512};
  std::vector<std::string> g_family = {"zero"};
};

RunConfig read_run_config(const Config& cfg) {
  RunConfig rc;
  rc.domain.kind = domain_kind_from_string(cfg.get_string("domain", "kind", "interval"));
  {
    const std::vector<double> ext =
        cfg.get_doubles("domain", "extents", {rc.domain.extents[0], rc.domain.extents[1]});
    rc.domain.extents[0] = ext[0];
    rc.domain.extents[1] = ext.size() > 1 ? ext[1] : ext[0];
  }
  rc.domain.resolution = cfg.get_int("domain", "resolution", rc.domain.resolution);
  rc.domain.epsilon0 = cfg.get_double("domain", "epsilon0", rc.domain.epsilon0);
  rc.domain.smoothing_width = cfg.get_double("domain", "smoothing_width", rc.domain.smoothing_width);

  rc.q = cfg.get_double("hjb", "q", rc.q);
  rc.rhs = cfg.get_string("hjb", "rhs", rc.rhs);
  rc.x0 = cfg.get_string("hjb", "x0", rc.x0);
  rc.boundary_layer = cfg.get_string("hjb", "boundary_layer", rc.boundary_layer);
  rc.lambda_schedule = cfg.get_doubles("hjb", "lambda_schedule", rc.lambda_schedule);
  rc.newton_tol = cfg.get_double("hjb", "newton_tol", rc.newton_tol);
  rc.rho_cross_tol = cfg.get_double("hjb", "rho_cross_tol", rc.rho_cross_tol);
  rc.max_newton_iter = cfg.get_int("hjb", "max_newton_iter", rc.max_newton_iter);

  rc.kfp_drift = cfg.get_string("kfp", "drift", rc.kfp_drift);
  rc.continuation = cfg.get_doubles("kfp", "continuation", rc.continuation);
  rc.lyapunov_C = cfg.get_double("kfp", "lyapunov_C", rc.lyapunov_C);
  rc.lyapunov_eps = cfg.get_double("kfp", "lyapunov_eps", rc.lyapunov_eps);

  rc.coupling_kind = cfg.get_string("coupling", "kind", rc.coupling_kind);
  rc.local_f = cfg.get_string("coupling", "local_f", rc.local_f);
  rc.kernel_bandwidth = cfg.get_double("coupling", "kernel_bandwidth", rc.kernel_bandwidth);
  rc.monotone = cfg.get_bool("coupling", "monotone", rc.monotone);

  rc.gamma = cfg.get_double("mfg", "gamma", rc.gamma);
  rc.delta_schedule = cfg.get_doubles("mfg", "delta_schedule", rc.delta_schedule);
  rc.theta = cfg.get_double("mfg", "theta", rc.theta);
  rc.fp_tolerance = cfg.get_double("mfg", "fp_tolerance", rc.fp_tolerance);
  rc.max_iterations = cfg.get_int("mfg", "max_iterations", rc.max_iterations);
  rc.holder_alpha = cfg.get_double("mfg", "holder_alpha", rc.holder_alpha);

  rc.n_particles = cfg.get_int("particles", "n_particles", rc.n_particles);
  rc.horizon = cfg.get_double("particles", "horizon", rc.horizon);
  rc.base_dt = cfg.get_double("particles", "base_dt", rc.base_dt);
  rc.safety_band = cfg.get_double("particles", "safety_band", rc.safety_band);
  rc.particle_drift = cfg.get_string("particles", "drift", rc.particle_drift);
  rc.threads = cfg.get_int("particles", "threads", rc.threads);

  rc.q_values = cfg.get_doubles("sweep", "q_values", rc.q_values);
  {
    std::vector<double> res;
    for (int r : rc.resolutions) res.push_back(r);
    res = cfg.get_doubles("sweep", "resolutions", res);
    rc.resolutions.clear();
    for (double r : res) rc.resolutions.push_back(static_cast<int>(r));
  }
  rc.g_family = cfg.get_strings("sweep", "g_family", rc.g_family);

  cfg.enforce_consumed({"domain", "hjb", "kfp", "coupling", "mfg", "particles", "sweep"});

  // Cross-section admissibility; surfaced at load time so a bad request never
  // reaches a solver.
  if (cfg.has("mfg", "gamma")) {
    MFGConfig probe;
    probe.q = rc.q;
    probe.gamma = rc.gamma;
    const double hi = (2.0 * rc.q - 1.0) / (rc.q - 1.0);
    if (!(rc.gamma > 2.0 && rc.gamma < hi))
      throw ConfigError("mfg: gamma = " + format_double(rc.gamma) +
                        " outside the admissible interval (2, " + format_double(hi) +
                        ") for q = " + format_double(rc.q));
  }
  return rc;
}

json echo_config(const RunConfig& rc) {
  json j;
  j["domain"] = {{"kind", to_string(rc.domain.kind)},
                 {"extents", {rc.domain.extents[0], rc.domain.extents[1]}},
                 {"resolution", rc.domain.resolution},
                 {"epsilon0", rc.domain.epsilon0},
                 {"smoothing_width", rc.domain.smoothing_width}};
  j["hjb"] = {{"q", rc.q},
              {"rhs", rc.rhs},
              {"x0", rc.x0},
              {"boundary_layer", rc.boundary_layer},
              {"lambda_schedule", rc.lambda_schedule},
              {"newton_tol", rc.newton_tol},
              {"rho_cross_tol", rc.rho_cross_tol},
              {"max_newton_iter", rc.max_newton_iter}};
  j["kfp"] = {{"drift", rc.kfp_drift},
              {"continuation", rc.continuation},
              {"lyapunov_C", rc.lyapunov_C},
              {"lyapunov_eps", rc.lyapunov_eps}};
  j["coupling"] = {{"kind", rc.coupling_kind},
                   {"local_f", rc.local_f},
                   {"kernel_bandwidth", rc.kernel_bandwidth},
                   {"monotone", rc.monotone}};
  j["mfg"] = {{"gamma", rc.gamma},
              {"delta_schedule", rc.delta_schedule},
              {"theta", rc.theta},
              {"fp_tolerance", rc.fp_tolerance},
              {"max_iterations", rc.max_iterations},
              {"holder_alpha", rc.holder_alpha}};
  j["particles"] = {{"n_particles", rc.n_particles},
                    {"horizon", rc.horizon},
                    {"base_dt", rc.base_dt},
                    {"safety_band", rc.safety_band},
                    {"drift", rc.particle_drift},
                    {"threads", rc.threads}};
  j["sweep"] = {{"q_values", rc.q_values},
                {"resolutions", rc.resolutions},
                {"g_family", rc.g_family}};
  return j;
}

std::size_t resolve_x0(const Domain& dom, const std::string& spec) {
  if (spec == "center") return dom.center_node();
  if (spec.rfind("index:", 0) == 0) {
    const long idx = std::stol(spec.substr(6));
    if (idx < 0 || static_cast<std::size_t>(idx) >= dom.size())
      throw ConfigError("x0 index out of range");
    return static_cast<std::size_t>(idx);
  }
  throw ConfigError("unknown x0 spec '" + spec + "' (expected center | index:<i>)");
}

HJBProblem hjb_from(const RunConfig& rc, const Domain& dom) {
  HJBProblem p;
  p.q = rc.q;
  p.dom = &dom;
  p.g = make_rhs(dom, rc.rhs);
  p.x0 = resolve_x0(dom, rc.x0);
  if (rc.boundary_layer == "profile")
    p.boundary_layer = BoundaryLayer::Profile;
  else if (rc.boundary_layer == "large_constant")
    p.boundary_layer = BoundaryLayer::LargeConstant;
  else
    throw ConfigError("unknown boundary_layer '" + rc.boundary_layer + "'");
  p.lambda_schedule = rc.lambda_schedule;
  p.newton_tol = rc.newton_tol;
  p.rho_cross_tol = rc.rho_cross_tol;
  p.max_newton_iter = rc.max_newton_iter;
  return p;
}

Coupling coupling_from(const RunConfig& rc, const Domain& dom) {
  Coupling c = [&] {
    if (rc.coupling_kind == "nonlocal")
      return Coupling::gaussian_kernel(dom, rc.kernel_bandwidth, rc.monotone);
    if (rc.coupling_kind != "local")
      throw ConfigError("unknown coupling kind '" + rc.coupling_kind + "'");
    if (rc.local_f.rfind("table:", 0) == 0) {
      const std::string path = rc.local_f.substr(6);
      std::ifstream in(path);
      if (!in) throw ConfigError("cannot open coupling table '" + path + "'");
      std::vector<std::pair<double, double>> table;
      double a, bvalue;
      char comma;
      while (in >> a >> comma >> bvalue) table.emplace_back(a, bvalue);
      return Coupling::local_table(dom, table, rc.monotone);
    }
    Coupling lc = Coupling::local(dom, rc.local_f);
    if (rc.monotone && !lc.monotone())
      throw ConfigError("coupling: monotone flag set on the non-monotone profile '" +
                        rc.local_f + "'");
    return lc;
  }();
  c.set_holder_alpha(rc.holder_alpha);
  return c;
}

MFGConfig mfg_from(const RunConfig& rc, const Domain& dom, const Coupling& coupling) {
  MFGConfig mc;
  mc.dom = &dom;
  mc.coupling = &coupling;
  mc.q = rc.q;
  mc.gamma = rc.gamma;
  mc.delta_schedule = rc.delta_schedule;
  mc.theta = rc.theta;
  mc.fp_tolerance = rc.fp_tolerance;
  mc.max_iterations = rc.max_iterations;
  mc.holder_alpha = rc.holder_alpha;
  mc.x0 = resolve_x0(dom, rc.x0);
  mc.lambda_schedule = rc.lambda_schedule;
  mc.newton_tol = rc.newton_tol;
  mc.rho_cross_tol = rc.rho_cross_tol;
  return mc;
}

LyapunovSpec lyapunov_from(const RunConfig& rc) {
  LyapunovSpec spec;
  spec.C = rc.lyapunov_C > 0.0 ? rc.lyapunov_C : drift_limit_constant(rc.q);
  spec.epsilon = rc.lyapunov_eps > 0.0 ? rc.lyapunov_eps : 0.5 * (spec.C - 1.0);
  return spec;
}

json certificate_json(const CertificateReport& cert) {
  json bands = json::array();
  for (const auto& band : cert.band_table)
    bands.push_back({{"delta", band.delta}, {"integral", band.integral}});
  return {{"S", cert.S},
          {"delta_star", cert.delta_star},
          {"band_table", bands},
          {"pass", cert.pass},
          {"tolerance", cert.tolerance},
          {"weighted_norm", cert.weighted_norm},
          {"exponent", cert.exponent}};
}

json asymptotics_json(const AsymptoticsReport& rep, double q) {
  json bands = json::array();
  for (const auto& band : rep.bands)
    bands.push_back({{"d", band.d},
                     {"u", band.u_mean},
                     {"ratio", band.ratio},
                     {"grad_scaled", band.grad_scaled},
                     {"drift_scaled", band.drift_scaled},
                     {"count", band.count}});
  return {{"exponent_fit", rep.exponent_fit},
          {"prefactor_fit", rep.prefactor_fit},
          {"log_slope", rep.log_slope},
          {"gradient_limit", rep.gradient_limit},
          {"drift_limit", rep.drift_limit},
          {"grad_constant_sup", rep.grad_constant_sup},
          {"targets",
           {{"exponent", q < 2.0 ? (q - 2.0) / (q - 1.0) : 0.0},
            {"prefactor", q < 2.0 ? profile_prefactor(q) : 1.0},
            {"gradient_limit", gradient_limit_constant(q)},
            {"drift_limit", drift_limit_constant(q)}}},
          {"bands", bands}};
}

void write_bands_csv(const std::string& path, const AsymptoticsReport& rep) {
  std::vector<std::vector<double>> rows;
  for (const auto& band : rep.bands)
    rows.push_back({band.d, band.u_mean, band.ratio, band.grad_scaled, band.drift_scaled,
                    static_cast<double>(band.count)});
  write_table_csv(path, {"d", "u", "ratio", "grad_scaled", "drift_scaled", "count"}, rows);
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open output file '" + path + "'");
  out << j.dump(2) << '\n';
}

void write_manifest(const fs::path& dir, const RunManifest& manifest, const RunConfig& rc) {
  json j;
  j["version"] = kVersion;
  j["command"] = manifest.command;
  j["seed"] = manifest.seed;
  j["log_level"] = manifest.log_level;
  j["resolved_config"] = echo_config(rc);
  write_json((dir / "manifest.json").string(), j);
}

DriftField drift_for_kfp(const RunConfig& rc, const Domain& dom, const Logger& log,
                         ValueSolution* value_out = nullptr) {
  if (rc.kfp_drift == "zero") {
    DriftField b;
    b.q = rc.q;
    b.b = VectorGridField(dom, 0.0);
    return b;
  }
  if (rc.kfp_drift.rfind("const:", 0) == 0) {
    const double c = std::stod(rc.kfp_drift.substr(6));
    DriftField b;
    b.q = rc.q;
    b.b = VectorGridField(dom, 0.0);
    for (std::size_t i = 0; i < dom.size(); ++i) b.b.vx[i] = c;
    return b;
  }
  if (rc.kfp_drift != "solve")
    throw ConfigError("unknown kfp drift '" + rc.kfp_drift + "' (solve | zero | const:<c>)");
  log.info("solving the value problem for the transport drift");
  ValueSolution sol = solve_ergodic(hjb_from(rc, dom));
  DriftField b = drift_from_value(sol);
  if (value_out) *value_out = std::move(sol);
  return b;
}

GridField read_field_csv(const std::string& path, const Domain& dom) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::string line;
  std::getline(in, line);  // header
  GridField f(dom);
  std::size_t count = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tok;
    std::vector<std::string> cells;
    while (std::getline(ss, tok, ',')) cells.push_back(tok);
    if (cells.size() < 3) throw ConfigError("malformed field row in '" + path + "'");
    const std::size_t idx = std::stoul(cells[0]);
    if (idx >= dom.size()) throw ConfigError("field row index out of range in '" + path + "'");
    f.v[idx] = std::stod(cells.back());
    ++count;
  }
  if (count != dom.size())
    throw ConfigError("field '" + path + "' does not match the domain size");
  return f;
}

int command_hjb(const RunManifest& manifest, const RunConfig& rc, const fs::path& out,
                const Logger& log) {
  const Domain dom = Domain::build(rc.domain);
  const ValueSolution sol = solve_ergodic(hjb_from(rc, dom));
  log.info("rho = " + format_double(sol.rho) + " (extrapolated " +
           format_double(sol.rho_extrapolated) + ")");
  const AsymptoticsReport rep = fit_boundary_asymptotics(sol);

  write_field_csv((out / "u.csv").string(), sol.u);
  write_bands_csv((out / "bands.csv").string(), rep);
  json j = asymptotics_json(rep, rc.q);
  j["rho"] = sol.rho;
  j["rho_extrapolated"] = sol.rho_extrapolated;
  j["residual"] = sol.residual_norm;
  json trace = json::array();
  for (const auto& [lam, mu] : sol.lambda_trace) trace.push_back({{"lambda", lam}, {"mu", mu}});
  j["lambda_trace"] = trace;
  write_json((out / "report.json").string(), j);
  write_text_file((out / "plot.py").string(), plotting_script());
  write_manifest(out, manifest, rc);
  return 0;
}

int command_kfp(const RunManifest& manifest, const RunConfig& rc, const fs::path& out,
                const Logger& log) {
  const Domain dom = Domain::build(rc.domain);
  const DriftField b = drift_for_kfp(rc, dom, log);
  const std::vector<double> continuation =
      rc.continuation.empty() ? default_continuation(dom) : rc.continuation;

  KfpContinuationTrace trace;
  const Density m = solve_kfp_whole(b, continuation, &trace);
  write_field_csv((out / "m.csv").string(), m.m);

  json j;
  j["mass"] = m.mass();
  j["continuation_deltas"] = trace.deltas;
  j["continuation_l1_diffs"] = trace.l1_diffs;
  j["harnack_ratio_omega_0.1"] = harnack_ratio(m, 0.1);
  bool pass = true;
  if (rc.kfp_drift == "solve") {
    const CertificateReport cert = lyapunov_certificate(b, m, lyapunov_from(rc));
    j["certificate"] = certificate_json(cert);
    pass = cert.pass;
  }
  write_json((out / "report.json").string(), j);
  write_text_file((out / "plot.py").string(), plotting_script());
  write_manifest(out, manifest, rc);
  return pass ? 0 : 1;
}

void write_mfg_artifacts(const fs::path& out, const MFGSolution& sol) {
  write_field_csv((out / "u.csv").string(), sol.u);
  write_field_csv((out / "m.csv").string(), sol.m.m);
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < sol.fp_residual_trace.size(); ++k)
    rows.push_back({static_cast<double>(k), sol.fp_residual_trace[k]});
  write_table_csv((out / "trace.csv").string(), {"iteration", "residual"}, rows);

  json j;
  j["rho"] = sol.rho;
  j["iterations"] = sol.iterations;
  j["fp_residual"] = sol.fp_residual_trace.empty() ? -1.0 : sol.fp_residual_trace.back();
  j["norm_ceiling"] = sol.norm_ceiling;
  j["contraction_estimate"] = sol.contraction_estimate;
  j["mass"] = sol.m.mass();
  json dt = json::array();
  for (const auto& entry : sol.delta_trace)
    dt.push_back({{"delta", entry.delta},
                  {"rho", entry.rho},
                  {"iterations", entry.iterations},
                  {"fp_residual", entry.fp_residual}});
  j["delta_trace"] = dt;
  if (sol.certificate) j["certificate"] = certificate_json(*sol.certificate);
  write_json((out / "report.json").string(), j);
  write_text_file((out / "plot.py").string(), plotting_script());
}

int command_solve_local(const RunManifest& manifest, const RunConfig& rc, const fs::path& out,
                        const Logger& log) {
  const Domain dom = Domain::build(rc.domain);
  const Coupling coupling = coupling_from(rc, dom);
  if (coupling.kind() != CouplingKind::LocalFunction)
    throw ConfigError("solve-local requires a local coupling");
  const MFGSolution sol = solve_local(mfg_from(rc, dom, coupling));
  log.info("converged: rho = " + format_double(sol.rho) + " after " +
           std::to_string(sol.iterations) + " total iterations");
  write_mfg_artifacts(out, sol);
  write_manifest(out, manifest, rc);
  return (sol.certificate && !sol.certificate->pass) ? 1 : 0;
}

int command_solve_nonlocal(const RunManifest& manifest, const RunConfig& rc, const fs::path& out,
                           const Logger& log) {
  const Domain dom = Domain::build(rc.domain);
  const Coupling coupling = coupling_from(rc, dom);
  if (coupling.kind() != CouplingKind::NonlocalKernel)
    throw ConfigError("solve-nonlocal requires a nonlocal coupling");
  const MFGSolution sol = solve_nonlocal(mfg_from(rc, dom, coupling));
  log.info("converged: rho = " + format_double(sol.rho) + " after " +
           std::to_string(sol.iterations) + " iterations");
  write_mfg_artifacts(out, sol);
  write_manifest(out, manifest, rc);
  return (sol.certificate && !sol.certificate->pass) ? 1 : 0;
}

int command_sweep(const RunManifest& manifest, const RunConfig& rc, const fs::path& out,
                  const Logger& log) {
  SweepPlan plan;
  plan.base_domain = rc.domain;
  plan.q_values = rc.q_values;
  plan.resolutions = rc.resolutions;
  plan.g_family = rc.g_family;
  const SweepReport rep = run_sweep(plan);
  log.info("sweep finished with " + std::to_string(rep.entries.size()) + " entries");

  std::vector<std::vector<double>> rows;
  for (const auto& entry : rep.entries)
    rows.push_back({entry.q, static_cast<double>(entry.resolution), entry.g_norm, entry.rho,
                    entry.report.exponent_fit, entry.report.prefactor_fit,
                    entry.report.log_slope, entry.report.gradient_limit,
                    entry.report.drift_limit});
  write_table_csv((out / "sweep.csv").string(),
                  {"q", "resolution", "g_norm", "rho", "exponent", "prefactor", "log_slope",
                   "gradient_limit", "drift_limit"},
                  rows);

  json j;
  json entries = json::array();
  for (const auto& entry : rep.entries) {
    json e = asymptotics_json(entry.report, entry.q);
    e["q"] = entry.q;
    e["resolution"] = entry.resolution;
    e["g"] = entry.g_name;
    e["g_norm"] = entry.g_norm;
    e["rho"] = entry.rho;
    entries.push_back(e);
  }
  j["entries"] = entries;
  json uni = json::array();
  for (const auto& row : rep.uniformity)
    uni.push_back({{"q", row.q},
                   {"resolution", row.resolution},
                   {"d", row.d},
                   {"deviation_per_g", row.deviation_per_g},
                   {"worst", row.worst}});
  j["uniformity"] = uni;
  write_json((out / "report.json").string(), j);
  write_text_file((out / "plot.py").string(), plotting_script());
  write_manifest(out, manifest, rc);
  return 0;
}

int command_particles(const RunManifest& manifest, const RunConfig& rc, const fs::path& out,
                      const Logger& log) {
  const Domain dom = Domain::build(rc.domain);

  ParticleConfig pc;
  pc.dom = &dom;
  pc.n_particles = rc.n_particles;
  pc.horizon = rc.horizon;
  pc.base_dt = rc.base_dt;
  pc.seed = manifest.seed;
  pc.safety_band = rc.safety_band;
  pc.threads = rc.threads;
  Vec2 start{0.0, 0.0};
  switch (rc.domain.kind) {
    case DomainKind::Interval: start = {rc.domain.extents[0] / 2.0, 0.0}; break;
    case DomainKind::Rectangle:
      start = {rc.domain.extents[0] / 2.0, rc.domain.extents[1] / 2.0};
      break;
    case DomainKind::Disk: start = {0.0, 0.0}; break;
  }
  pc.start = start;

  DriftField drift;
  Density reference;
  bool have_drift = rc.particle_drift == "solve";
  if (have_drift) {
    drift = drift_for_kfp(rc, dom, log);
    const DriftConstantEstimate est = estimate_drift_constant(drift);
    if (!(est.C > 1.0))
      throw ConfigError("particles: drift is not certified (estimated constant " +
                        format_double(est.C) + " <= 1)");
    pc.drift = &drift;
    pc.certified_constant = drift_limit_constant(rc.q);
    reference = solve_kfp_whole(drift, default_continuation(dom));
    pc.reference = &reference;
  } else if (rc.particle_drift != "zero") {
    throw ConfigError("unknown particles drift '" + rc.particle_drift + "' (solve | zero)");
  }

  const EnsembleReport rep = simulate(pc);
  log.info("exit_count = " + std::to_string(rep.exit_count) +
           ", tv = " + format_double(rep.tv_distance));

  json j;
  j["exit_count"] = rep.exit_count;
  j["min_distance"] = rep.min_distance;
  j["tv_distance"] = rep.tv_distance;
  j["runtime"] = rep.runtime_seconds;
  j["histogram_samples"] = rep.histogram_samples;
  j["retries"] = rep.retries;
  j["effective_dt"] = rep.effective_dt;
  if (!have_drift) {
    j["brownian_oracle_exit_probability"] =
        rc.domain.kind == DomainKind::Interval
            ? brownian_exit_probability(pc.start.x, rc.domain.extents[0], rc.horizon)
            : -1.0;
  }
  write_json((out / "report.json").string(), j);

  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < dom.size(); ++i) {
    std::vector<double> row{static_cast<double>(i), dom.coord(i).x};
    if (dom.dim() == 2) row.push_back(dom.coord(i).y);
    row.push_back(rep.histogram[i]);
    if (pc.reference) row.push_back(reference.m.v[i]);
    rows.push_back(std::move(row));
  }
  std::vector<std::string> header{"index", "x"};
  if (dom.dim() == 2) header.push_back("y");
  header.push_back("density");
  if (pc.reference) header.push_back("reference");
  write_table_csv((out / "histogram.csv").string(), header, rows);
  write_text_file((out / "plot.py").string(), plotting_script());
  write_manifest(out, manifest, rc);

  const bool pass = have_drift ? (rep.exit_count == 0) : true;
  return pass ? 0 : 1;
}

int command_uniqueness(const RunManifest& manifest, const RunConfig& rc, const fs::path& out,
                       const Logger& log) {
  if (manifest.run_a.empty() || manifest.run_b.empty())
    throw ConfigError("uniqueness needs --a and --b run directories");

  auto load_run = [&](const std::string& dir, const Domain& dom, const Coupling& coupling,
                      double q) {
    MFGSolution sol;
    sol.u = read_field_csv((fs::path(dir) / "u.csv").string(), dom);
    sol.m.m = read_field_csv((fs::path(dir) / "m.csv").string(), dom);
    sol.m.m.support_delta = 0.0;
    std::ifstream in((fs::path(dir) / "report.json").string());
    if (!in) throw ConfigError("cannot open report.json in '" + dir + "'");
    json j;
    in >> j;
    sol.rho = j.at("rho").get<double>();
    sol.q = q;
    sol.coupling = &coupling;
    return sol;
  };

  auto manifest_config = [&](const std::string& dir) {
    std::ifstream in((fs::path(dir) / "manifest.json").string());
    if (!in) throw ConfigError("cannot open manifest.json in '" + dir + "'");
    json j;
    in >> j;
    return j.at("resolved_config");
  };

  const json ca = manifest_config(manifest.run_a);
  const json cb = manifest_config(manifest.run_b);
  if (ca.at("domain") != cb.at("domain") || ca.at("hjb").at("q") != cb.at("hjb").at("q") ||
      ca.at("coupling") != cb.at("coupling"))
    throw ConfigError("uniqueness: the two runs disagree on grid, q, or coupling");

  const Domain dom = Domain::build(rc.domain);
  const Coupling coupling = coupling_from(rc, dom);
  const double q = rc.q;
  const MFGSolution a = load_run(manifest.run_a, dom, coupling, q);
  const MFGSolution b = load_run(manifest.run_b, dom, coupling, q);

  double l1 = 0.0, rho_gap = std::abs(a.rho - b.rho);
  for (std::size_t i = 0; i < dom.size(); ++i) l1 += std::abs(a.m.m.v[i] - b.m.m.v[i]);
  l1 *= dom.cell_volume();
  log.info("|rho_a - rho_b| = " + format_double(rho_gap) + ", L1(m_a - m_b) = " +
           format_double(l1));

  json deltas = json::array();
  bool pass = true;
  for (double delta : rc.delta_schedule) {
    const IdentityReport rep = uniqueness_diagnostic(a, b, delta);
    pass = pass && rep.monotone_term >= -1e-8 && rep.convexity_1 <= 1e-8 &&
           rep.convexity_2 <= 1e-8 && rep.max_dphi_delta <= rep.c1 + 1e-12;
    deltas.push_back({{"delta", rep.delta},
                      {"monotone_term", rep.monotone_term},
                      {"convexity_1", rep.convexity_1},
                      {"convexity_2", rep.convexity_2},
                      {"rho_term", rep.rho_term},
                      {"dphi_remainder", rep.dphi_remainder},
                      {"lapphi_remainder", rep.lapphi_remainder},
                      {"bound_dphi", rep.bound_dphi},
                      {"bound_lapphi", rep.bound_lapphi},
                      {"c1", rep.c1},
                      {"max_dphi_delta", rep.max_dphi_delta}});
  }
  json j;
  j["per_delta"] = deltas;
  j["l1_gap"] = l1;
  j["rho_gap"] = rho_gap;
  j["pass"] = pass;
  write_json((out / "identity.json").string(), j);
  write_manifest(out, manifest, rc);
  return pass ? 0 : 1;
}

}  // namespace

int run(const RunManifest& manifest) {
  Logger log;
  try {
    log.level = log_level_from(manifest.log_level);
    const Config cfg = Config::parse_file(manifest.config_path);
    const RunConfig rc = read_run_config(cfg);
    const fs::path out(manifest.out_dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    {
      std::ofstream probe(out / ".write_probe");
      if (!probe) throw ConfigError("output directory '" + manifest.out_dir + "' is not writable");
    }
    fs::remove(out / ".write_probe");

    if (manifest.command == "hjb") return command_hjb(manifest, rc, out, log);
    if (manifest.command == "kfp") return command_kfp(manifest, rc, out, log);
    if (manifest.command == "solve-local") return command_solve_local(manifest, rc, out, log);
    if (manifest.command == "solve-nonlocal")
      return command_solve_nonlocal(manifest, rc, out, log);
    if (manifest.command == "sweep") return command_sweep(manifest, rc, out, log);
    if (manifest.command == "particles") return command_particles(manifest, rc, out, log);
    if (manifest.command == "uniqueness") return command_uniqueness(manifest, rc, out, log);
    throw ConfigError("unknown command '" + manifest.command +
                      "' (solve-nonlocal | solve-local | hjb | kfp | sweep | particles | "
                      "uniqueness)");
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 3;
  } catch (const SolverError& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return 2;
  } catch (const DiagnosticError& e) {
    std::fprintf(stderr, "diagnostic error: %s\n", e.what());
    return 2;
  } catch (const TightnessError& e) {
    std::fprintf(stderr, "tightness error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace ergmfg
