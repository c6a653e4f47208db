#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>

#include <fmt/core.h>

#include "lanneal/error.hpp"
#include "lanneal/experiments.hpp"

namespace lanneal {

using nlohmann::json;

LandscapeFacts landscape_facts(const PotentialModel& model) {
  LandscapeFacts f;
  f.analysis = analyze_landscape(model, model.default_grid());
  f.E_star = f.analysis.critical_depth;
  f.nonglobal = f.analysis.deepest_nonglobal();
  if (f.nonglobal) f.gap = f.nonglobal->value - f.analysis.global().value;
  return f;
}

std::vector<double> log_times(double T, std::size_t n) {
  if (n < 2) throw ConfigError("need at least 2 evaluation times");
  if (!(T > 1.0)) throw ConfigError("the final time must exceed 1");
  std::vector<double> out(n);
  const double lT = std::log(T);
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = std::exp(lT * static_cast<double>(k) / static_cast<double>(n - 1));
  }
  out.front() = 1.0;
  out.back() = T;
  return out;
}

namespace {

// Plain gradient descent with backtracking; good enough to tell which basin a point drains into.
Point descend(const PotentialModel& model, Point x) {
  const std::size_t d = x.size();
  Point g(d), trial(d);
  double step = 1e-2;
  for (int it = 0; it < 200000; ++it) {
    model.gradient(x, g);
    double gn = 0.0;
    for (double v : g) gn += v * v;
    if (std::sqrt(gn) < 1e-8) break;
    const double u0 = model.energy(x);
    for (;;) {
      for (std::size_t k = 0; k < d; ++k) trial[k] = x[k] - step * g[k];
      if (model.energy(trial) <= u0 - 0.5 * step * gn || step < 1e-14) break;
      step *= 0.5;
    }
    x = trial;
    step = std::min(step * 2.0, 1.0);
  }
  return x;
}

double dist2(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

bool in_global_basin(const PotentialModel& model, const LandscapeAnalysis& an, const Point& x) {
  const Point end = descend(model, x);
  const Minimum* best = nullptr;
  double bd = 0.0;
  for (const auto& m : an.minima) {
    const double dd = dist2(m.location, end);
    if (!best || dd < bd) {
      best = &m;
      bd = dd;
    }
  }
  return best && best->is_global;
}

struct Common {
  PotentialModel model;
  VarianceMap var;
  LandscapeFacts facts;
  double delta = 0.0;
  Point init_x;
  std::vector<double> eval_times;
};

Common prepare(const ExperimentConfig& cfg, bool need_nonglobal) {
  if (cfg.ensemble.n == 0) throw ConfigError("ensemble.n must be positive");
  Common c{build_potential(cfg.potential), build_variance(cfg.variance), {}, 0.0, {}, {}};
  c.facts = landscape_facts(c.model);
  if (need_nonglobal && !c.facts.nonglobal) {
    throw ConfigError(fmt::format(
        "potential '{}' has no non-global local minimum; the study assumes at least one exists", c.model.name()));
  }
  if (cfg.trial.delta > 0.0) {
    c.delta = cfg.trial.delta;
  } else {
    if (!c.facts.nonglobal) {
      throw ConfigError("trial.delta = 0 derives delta from the non-global minimum, and there is none; set trial.delta");
    }
    if (!(cfg.trial.delta_fraction > 0.0)) throw ConfigError("trial.delta_fraction must be positive");
    c.delta = cfg.trial.delta_fraction * c.facts.gap;
  }
  if (!cfg.init.x.empty()) {
    if (cfg.init.x.size() != c.model.dim()) throw ConfigError("init.x has the wrong dimension");
    c.init_x = cfg.init.x;
  } else if (c.facts.nonglobal) {
    c.init_x = c.facts.nonglobal->location;
  } else {
    throw ConfigError("init.x is empty and the potential has no non-global minimum to start from");
  }
  if (!cfg.init.y.empty() && cfg.init.y.size() != c.model.dim()) throw ConfigError("init.y has the wrong dimension");
  c.eval_times = log_times(cfg.trial.T_final, cfg.trial.n_checkpoints);
  return c;
}

InitSampler make_init(const ExperimentConfig& cfg, const Common& c, const CoolingSchedule& sched) {
  const double eps0 = sched.eps0();
  const double sigma0 = c.var.sigma(eps0);
  std::optional<Point> y;
  if (!cfg.init.y.empty()) y = cfg.init.y;
  if (cfg.init.mode == "point") return point_init(c.init_x, y, sigma0);
  if (cfg.init.mode == "gibbs-local") return gibbs_local_init(c.model, c.init_x, eps0, sigma0);
  throw ConfigError(fmt::format("unknown init mode '{}'", cfg.init.mode));
}

TrialSetup make_setup(const ExperimentConfig& cfg, const Common& c, const CoolingSchedule& sched, Dynamics dyn) {
  TrialSetup s;
  s.model = &c.model;
  s.sched = &sched;
  s.var = &c.var;
  s.integrator = default_integrator(c.model, sched, c.var);
  s.integrator.scheme = parse_scheme(cfg.integrator.scheme);
  if (cfg.integrator.dt > 0.0) s.integrator.dt = cfg.integrator.dt;
  if (cfg.integrator.divergence_radius > 0.0) s.integrator.divergence_radius = cfg.integrator.divergence_radius;
  s.dynamics = dyn;
  s.T_final = cfg.trial.T_final;
  s.delta = c.delta;
  s.checkpoints = c.eval_times;
  return s;
}

// Second arm's seed: a splitmix64 step away from the first, so the arms never share noise.
std::uint64_t derived_seed(std::uint64_t seed) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

StudyReport run_dichotomy_study(const ExperimentConfig& cfg, std::size_t threads) {
  const Common c = prepare(cfg, true);
  if (!c.facts.E_star) throw ConfigError("potential has no critical depth");
  const double E_star = *c.facts.E_star;
  if (!(cfg.dichotomy.c_slow > 1.0)) throw ConfigError("dichotomy.c_slow must exceed 1");
  if (!(cfg.dichotomy.c_fast > 0.0 && cfg.dichotomy.c_fast < 1.0)) throw ConfigError("dichotomy.c_fast must lie in (0, 1)");

  StudyReport r;
  r.config_hash = config_hash(cfg);
  r.E_star = E_star;
  r.delta = c.delta;
  r.init_x = c.init_x;
  r.init_in_global_basin = in_global_basin(c.model, c.facts.analysis, c.init_x);

  const Dynamics dyn = parse_dynamics(cfg.integrator.dynamics);
  auto run_arm = [&](const char* name, double factor, std::uint64_t seed) {
    ArmReport arm;
    arm.name = name;
    arm.c = factor;
    arm.E = factor * E_star;
    const CoolingSchedule sched = CoolingSchedule::logarithmic(arm.E, cfg.schedule.A);
    const TrialSetup setup = make_setup(cfg, c, sched, dyn);
    arm.ensemble = run_ensemble(cfg.ensemble.n, make_init(cfg, c, sched), setup, seed, threads);
    return arm;
  };
  r.slow = run_arm("slow", cfg.dichotomy.c_slow, cfg.ensemble.master_seed);
  r.fast = run_arm("fast", cfg.dichotomy.c_fast, derived_seed(cfg.ensemble.master_seed));

  if (r.init_in_global_basin) {
    r.slow_converges = "uninformative-init";
    r.fast_traps = "uninformative-init";
  } else {
    const double ps = r.slow.ensemble.p_hat.back();
    const double pf = r.fast.ensemble.p_hat.back();
    const Interval ws = r.slow.ensemble.wilson.back();
    const Interval wf = r.fast.ensemble.wilson.back();
    r.slow_converges = ps >= 0.9 ? "pass" : "fail";
    r.fast_traps = (pf <= ps - 0.2 && wf.hi < ws.lo) ? "pass" : "fail";
  }

  const double t_min = cfg.trial.T_final >= 1e3 ? 100.0 : 0.0;
  r.slow_moments = track_moments(r.slow.ensemble.trials, 1, c.model.global_min_value(), t_min);
  return r;
}

TrialReport run_configured_trial(const ExperimentConfig& cfg, std::uint64_t index) {
  ExperimentConfig one = cfg;
  one.ensemble.n = 1;
  const Common c = prepare(one, false);
  const CoolingSchedule sched = build_schedule(cfg.schedule, c.facts.E_star);
  const TrialSetup setup = make_setup(cfg, c, sched, parse_dynamics(cfg.integrator.dynamics));
  const CounterNoise noise(cfg.ensemble.master_seed, index);
  return run_trial(make_init(cfg, c, sched)(noise), setup, noise);
}

EnsembleReport run_configured_ensemble(const ExperimentConfig& cfg, std::size_t threads) {
  const Common c = prepare(cfg, false);
  const CoolingSchedule sched = build_schedule(cfg.schedule, c.facts.E_star);
  const TrialSetup setup = make_setup(cfg, c, sched, parse_dynamics(cfg.integrator.dynamics));
  return run_ensemble(cfg.ensemble.n, make_init(cfg, c, sched), setup, cfg.ensemble.master_seed, threads);
}

BaselineReport run_baseline_comparison(const ExperimentConfig& cfg, std::size_t threads) {
  const Common c = prepare(cfg, false);
  const CoolingSchedule sched = build_schedule(cfg.schedule, c.facts.E_star);
  BaselineReport r;
  r.config_hash = config_hash(cfg);
  r.E = sched.E();
  r.delta = c.delta;
  const InitSampler init = make_init(cfg, c, sched);
  r.kinetic = run_ensemble(cfg.ensemble.n, init, make_setup(cfg, c, sched, Dynamics::kinetic),
                           cfg.ensemble.master_seed, threads);
  r.overdamped = run_ensemble(cfg.ensemble.n, init, make_setup(cfg, c, sched, Dynamics::overdamped),
                              cfg.ensemble.master_seed, threads);
  return r;
}

PhaseGrid fokker_planck_grid(const ExperimentConfig& cfg, const VarianceMap& var, double eps0) {
  const auto& f = cfg.fokker_planck;
  if (!(eps0 > 0.0)) throw ConfigError("initial temperature must be positive");
  const double w = f.y_half_width > 0.0 ? f.y_half_width : 6.5 * std::sqrt(var.sigma(eps0));
  return PhaseGrid::make(f.x_min, f.x_max, -w, w, f.nx, f.ny);
}

DecayReport run_fokker_planck_study(const ExperimentConfig& cfg,
                                    const std::function<void(const DensityField&)>& on_checkpoint) {
  const PotentialModel model = build_potential(cfg.potential);
  if (model.dim() != 1) throw ConfigError("the Fokker-Planck solver handles 1-D potentials only");
  const VarianceMap var = build_variance(cfg.variance);
  const LandscapeFacts facts = landscape_facts(model);
  if (!facts.nonglobal || !facts.E_star) {
    throw ConfigError(fmt::format("potential '{}' has no non-global minimum to start the density from", model.name()));
  }
  const CoolingSchedule sched = build_schedule(cfg.schedule, facts.E_star);
  const double eps0 = sched.eps0();
  const PhaseGrid grid = fokker_planck_grid(cfg, var, eps0);
  const DensityField m0 = local_gibbs_density(model, var, eps0, facts.nonglobal->location[0], grid);
  std::vector<double> times{0.0};
  for (double t : log_times(cfg.fokker_planck.T, cfg.fokker_planck.n_checkpoints)) times.push_back(t);
  return decay_study(m0, model, sched, var, *facts.E_star, times, cfg.fokker_planck.dt, on_checkpoint);
}

GammaStudy run_gamma_study(const ExperimentConfig& cfg) {
  const PotentialModel model = build_potential(cfg.potential);
  if (model.dim() != 1) throw ConfigError("the Gamma checks handle 1-D potentials only");
  const VarianceMap var = build_variance(cfg.variance);
  const auto& g = cfg.gamma;
  if (g.eps.empty() || g.n_functions == 0) throw ConfigError("gamma.eps and gamma.n_functions must be non-empty");
  const PhaseGrid grid = PhaseGrid::make(g.x_min, g.x_max, g.y_min, g.y_max, g.nx, g.ny);
  GammaStudy out;
  out.all_pass = true;
  for (double eps : g.eps) {
    if (!(eps > 0.0)) throw ConfigError("gamma.eps entries must be positive");
    const DiscreteGenerator gen(model, var, eps, grid, Stencil::centered);
    for (std::size_t k = 0; k < g.n_functions; ++k) {
      const std::vector<double> h = random_test_function(grid, cfg.ensemble.master_seed, k);
      for (auto w : {GammaFunctional::Phi0, GammaFunctional::Phi1, GammaFunctional::Phi2, GammaFunctional::Psi}) {
        GammaEntry e{eps, k, gamma_check(h, gen, w, g.safety)};
        out.all_pass = out.all_pass && e.report.interior_pass;
        out.entries.push_back(e);
      }
      out.quadratic_lemma.push_back(quadratic_lemma_check(h, gen, g.safety));
      out.all_pass = out.all_pass && out.quadratic_lemma.back().pass;
    }
  }
  return out;
}

std::vector<LyapunovEntry> run_lyapunov_study(const ExperimentConfig& cfg) {
  std::vector<PotentialModel> models;
  if (cfg.lyapunov.suite) {
    models = builtin::suite();
  } else {
    models.push_back(build_potential(cfg.potential));
  }
  const VarianceMap var = build_variance(cfg.variance);
  if (cfg.lyapunov.eps.empty()) throw ConfigError("lyapunov.eps must be non-empty");
  std::vector<LyapunovEntry> out;
  for (const auto& m : models) {
    for (double eps : cfg.lyapunov.eps) {
      if (!(eps > 0.0)) throw ConfigError("lyapunov.eps entries must be positive");
      out.push_back({m.name(), check_lyapunov_drift(m, var, eps, cfg.lyapunov.n_samples, cfg.lyapunov.y_range)});
    }
  }
  return out;
}

std::vector<double> random_test_function(const PhaseGrid& grid, std::uint64_t seed, std::uint64_t index) {
  const CounterNoise noise(seed, index);
  struct Wave {
    double a, kx, ky, phase;
  };
  std::array<Wave, 3> waves{};
  std::uint64_t k = 0;
  auto u = [&] { return noise.uniform(k++, 0); };
  for (auto& w : waves) {
    w.a = 0.1 + 0.3 * u();
    w.kx = (u() < 0.5 ? -1.0 : 1.0) * (0.3 + 1.2 * u());
    w.ky = (u() < 0.5 ? -1.0 : 1.0) * (0.3 + 1.2 * u());
    w.phase = 2.0 * std::numbers::pi * u();
  }
  std::vector<double> h(grid.size());
  for (std::size_t i = 0; i < grid.nx; ++i) {
    const double x = grid.x(static_cast<std::ptrdiff_t>(i));
    for (std::size_t j = 0; j < grid.ny; ++j) {
      const double y = grid.y(static_cast<std::ptrdiff_t>(j));
      double s = 0.0;
      for (const auto& w : waves) s += w.a * std::sin(w.kx * x + w.ky * y + w.phase);
      h[grid.index(i, j)] = std::exp(s);
    }
  }
  return h;
}

// ------------------------------------------------------------------- writers

json to_json(const EnsembleReport& r, bool include_trials) {
  json wl = json::array(), wh = json::array();
  for (const auto& w : r.wilson) {
    wl.push_back(w.lo);
    wh.push_back(w.hi);
  }
  json j{{"n", r.n},
         {"delta", r.delta},
         {"threshold", r.threshold},
         {"eval_times", r.eval_times},
         {"successes", r.successes},
         {"p_hat", r.p_hat},
         {"wilson_lo", wl},
         {"wilson_hi", wh},
         {"diverged_count", r.diverged_count}};
  if (include_trials) {
    json trials = json::array();
    for (const auto& t : r.trials) {
      trials.push_back({{"index", t.index},
                        {"success", t.success},
                        {"diverged", t.diverged},
                        {"t", t.final_state.t},
                        {"x", t.final_state.x},
                        {"y", t.final_state.y}});
    }
    j["trials"] = std::move(trials);
  }
  return j;
}

namespace {

json arm_json(const ArmReport& a) {
  return {{"name", a.name}, {"E", a.E}, {"c", a.c}, {"ensemble", to_json(a.ensemble)}};
}

json moments_json(const MomentSeries& m) {
  json s = json::array();
  for (const auto& p : m.samples) {
    s.push_back({{"t", p.t}, {"estimate", p.estimate}, {"std_error", p.std_error}, {"count", p.count}});
  }
  return {{"p", m.p}, {"shift", m.shift}, {"exponent", m.exponent}, {"samples", s}};
}

}  // namespace

json to_json(const StudyReport& r) {
  return {{"config_hash", r.config_hash},
          {"version", r.version},
          {"E_star", r.E_star},
          {"delta", r.delta},
          {"init_x", r.init_x},
          {"init_in_global_basin", r.init_in_global_basin},
          {"slow", arm_json(r.slow)},
          {"fast", arm_json(r.fast)},
          {"verdicts", {{"slow_converges", r.slow_converges}, {"fast_traps", r.fast_traps}}},
          {"slow_moments", moments_json(r.slow_moments)}};
}

json to_json(const BaselineReport& r) {
  return {{"config_hash", r.config_hash},
          {"version", kVersion},
          {"E", r.E},
          {"delta", r.delta},
          {"kinetic", to_json(r.kinetic)},
          {"overdamped", to_json(r.overdamped)}};
}

json to_json(const LyapunovReport& r) {
  return {{"eps", r.eps},
          {"sigma", r.sigma},
          {"delta", r.delta},
          {"rho_hat", r.rho_hat},
          {"N_hat", r.N_hat},
          {"max_drift", r.max_drift},
          {"argmax_x", r.argmax_x},
          {"argmax_y", r.argmax_y},
          {"samples", r.samples},
          {"sandwich", {{"c", r.c}, {"C", r.C}, {"N", r.N_sandwich}, {"ok", r.sandwich_ok},
                        {"violations", r.sandwich_violations}}}};
}

json to_json(const GammaReport& r) {
  return {{"functional", to_string(r.which)},
          {"min_slack", r.min_slack},
          {"argmin_i", r.argmin_i},
          {"argmin_j", r.argmin_j},
          {"max_abs_residual", r.max_abs_residual},
          {"C_h", r.C_h},
          {"tol", r.tol},
          {"interior_pass", r.interior_pass},
          {"points", r.points},
          {"beta", r.beta}};
}

json to_json(const Certificate& c) {
  return {{"admissible", c.admissible}, {"violations", c.violations}, {"notes", c.notes}, {"samples", c.samples}};
}

json to_json(const LandscapeAnalysis& a) {
  json mins = json::array();
  for (const auto& m : a.minima) {
    mins.push_back({{"location", m.location},
                    {"value", m.value},
                    {"is_global", m.is_global},
                    {"depth", m.depth ? json(*m.depth) : json(nullptr)},
                    {"converged", m.converged}});
  }
  return {{"minima", mins},
          {"critical_depth", a.critical_depth ? json(*a.critical_depth) : json(nullptr)},
          {"grid_resolution", a.grid_resolution}};
}

json to_json(const DecayReport& r) {
  json s = json::array();
  for (const auto& p : r.series) {
    s.push_back({{"t", p.t},
                 {"eps", p.eps},
                 {"Ent", p.suite.Ent},
                 {"I", p.suite.I},
                 {"H", p.suite.H},
                 {"Phi1", p.suite.Phi1},
                 {"L1", p.suite.L1},
                 {"mass", p.suite.mass},
                 {"excluded_mass", p.suite.excluded_mass},
                 {"gamma_eps", p.suite.gamma_eps},
                 {"boundary_mass", p.boundary_mass}});
  }
  return {{"series", s},
          {"fitted_exponent", r.fitted_exponent},
          {"predicted_exponent", r.predicted_exponent},
          {"E_star", r.E_star},
          {"E", r.E},
          {"steps", r.steps}};
}

json to_json(const GammaStudy& s) {
  json e = json::array();
  for (const auto& x : s.entries) {
    json r = to_json(x.report);
    r["eps"] = x.eps;
    r["function_index"] = x.function_index;
    e.push_back(std::move(r));
  }
  json q = json::array();
  for (const auto& r : s.quadratic_lemma) {
    q.push_back({{"max_abs_residual", r.max_abs_residual}, {"tol", r.tol}, {"pass", r.pass}, {"points", r.points}});
  }
  return {{"entries", e}, {"quadratic_lemma", q}, {"all_pass", s.all_pass}};
}

json to_json(const std::vector<LyapunovEntry>& v) {
  json a = json::array();
  for (const auto& x : v) {
    json r = to_json(x.report);
    r["potential"] = x.potential;
    a.push_back(std::move(r));
  }
  return a;
}

std::string fmt_double(double v) { return fmt::format("{:.17g}", v); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw ConfigError(fmt::format("write to '{}' failed", path.string()));
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void write_snapshot(const std::filesystem::path& stem, const DensityField& m) {
  std::filesystem::path bin = stem;
  bin += ".bin";
  std::filesystem::path hdr = stem;
  hdr += ".json";
  std::string bytes(m.values.size() * sizeof(double), '\0');
  for (std::size_t k = 0; k < m.values.size(); ++k) {
    std::uint64_t w = std::bit_cast<std::uint64_t>(m.values[k]);
    for (int b = 0; b < 8; ++b) bytes[k * 8 + b] = static_cast<char>((w >> (8 * b)) & 0xff);
  }
  write_text(bin, bytes);
  write_json(hdr, {{"nx", m.grid.nx},
                   {"ny", m.grid.ny},
                   {"x_min", m.grid.x_min},
                   {"x_max", m.grid.x_max},
                   {"y_min", m.grid.y_min},
                   {"y_max", m.grid.y_max},
                   {"time", m.time},
                   {"layout", "row-major, index i*ny+j, little-endian float64"}});
}

std::string ensemble_csv(const EnsembleReport& r) {
  std::string s = "t,successes,n,p_hat,wilson_lo,wilson_hi\n";
  for (std::size_t k = 0; k < r.eval_times.size(); ++k) {
    s += fmt::format("{},{},{},{},{},{}\n", fmt_double(r.eval_times[k]), r.successes[k], r.n, fmt_double(r.p_hat[k]),
                     fmt_double(r.wilson[k].lo), fmt_double(r.wilson[k].hi));
  }
  return s;
}

namespace {

std::string paired_csv(const char* a, const EnsembleReport& ra, const char* b, const EnsembleReport& rb) {
  std::string s = fmt::format("t,{0}_p_hat,{0}_wilson_lo,{0}_wilson_hi,{1}_p_hat,{1}_wilson_lo,{1}_wilson_hi\n", a, b);
  for (std::size_t k = 0; k < ra.eval_times.size(); ++k) {
    s += fmt::format("{},{},{},{},{},{},{}\n", fmt_double(ra.eval_times[k]), fmt_double(ra.p_hat[k]),
                     fmt_double(ra.wilson[k].lo), fmt_double(ra.wilson[k].hi), fmt_double(rb.p_hat[k]),
                     fmt_double(rb.wilson[k].lo), fmt_double(rb.wilson[k].hi));
  }
  return s;
}

}  // namespace

std::string study_csv(const StudyReport& r) { return paired_csv("slow", r.slow.ensemble, "fast", r.fast.ensemble); }

std::string baseline_csv(const BaselineReport& r) {
  return paired_csv("kinetic", r.kinetic, "overdamped", r.overdamped);
}

std::string trial_csv(const TrialReport& r) {
  std::size_t d = r.final_state.x.size();
  std::string s = "t,U,y2";
  for (std::size_t k = 0; k < d; ++k) s += fmt::format(",x{}", k);
  for (std::size_t k = 0; k < r.final_state.y.size(); ++k) s += fmt::format(",y{}", k);
  s += "\n";
  for (const auto& c : r.checkpoints) {
    s += fmt::format("{},{},{}", fmt_double(c.t), fmt_double(c.U), fmt_double(c.y2));
    for (double v : c.x) s += "," + fmt_double(v);
    for (double v : c.y) s += "," + fmt_double(v);
    s += "\n";
  }
  return s;
}

std::string decay_csv(const DecayReport& r) {
  std::string s = "t,eps,Ent,I,H,Phi1,L1,mass,boundary_mass,excluded_mass\n";
  for (const auto& p : r.series) {
    s += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", fmt_double(p.t), fmt_double(p.eps), fmt_double(p.suite.Ent),
                     fmt_double(p.suite.I), fmt_double(p.suite.H), fmt_double(p.suite.Phi1), fmt_double(p.suite.L1),
                     fmt_double(p.suite.mass), fmt_double(p.boundary_mass), fmt_double(p.suite.excluded_mass));
  }
  return s;
}

}  // namespace lanneal
