#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "lanneal/error.hpp"
#include "lanneal/experiments.hpp"

namespace fs = std::filesystem;
using namespace lanneal;
using nlohmann::json;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::size_t threads = 1;
};

void add_globals(CLI::App* sub, Globals& g) {
  sub->add_option("--config", g.config, "JSON config file (missing keys take defaults)");
  sub->add_option("--seed", g.seed, "Override ensemble.master_seed");
  sub->add_option("--out", g.out, "Output directory (overrides out_dir)");
  sub->add_option("--threads", g.threads, "Worker threads; results do not depend on it")->check(CLI::PositiveNumber);
}

ExperimentConfig resolve(const Globals& g) {
  ExperimentConfig cfg = g.config.empty() ? ExperimentConfig{} : load_config(g.config);
  if (g.seed) cfg.ensemble.master_seed = *g.seed;
  if (!g.out.empty()) cfg.out_dir = g.out;
  return cfg;
}

// The resolved config is written without out_dir so that runs into different
// directories stay byte-comparable.
void write_resolved(const ExperimentConfig& cfg) {
  json j = to_json(cfg);
  j.erase("out_dir");
  write_json(fs::path(cfg.out_dir) / "config.json", j);
}

json model_json(const PotentialModel& m) {
  json j{{"name", m.name()},
         {"dim", m.dim()},
         {"hessian_sup_norm", m.hessian_sup_norm()},
         {"hessian_is_lower_bound", m.hessian_is_lower_bound()},
         {"hessian_growth_warning", m.hessian_growth_warning()},
         {"global_min_value", m.global_min_value()},
         {"global_minimizer", m.global_minimizer()},
         {"domain_lo", m.domain().lo},
         {"domain_hi", m.domain().hi}};
  if (const auto& g = m.growth()) {
    const GrowthReport gr = verify_growth(m, m.domain(), 4096);
    j["growth"] = {{"a1", g->a1}, {"a2", g->a2}, {"M", g->M}, {"r", g->r}, {"verified_on_domain", gr.pass},
                   {"worst_margins", gr.worst_margins}};
  } else {
    j["growth"] = nullptr;
  }
  return j;
}

int cmd_analyze(const ExperimentConfig& cfg) {
  const PotentialModel model = build_potential(cfg.potential);
  const LandscapeFacts f = landscape_facts(model);
  json j{{"model", model_json(model)}, {"analysis", to_json(f.analysis)}, {"version", kVersion}};
  j["E_star"] = f.E_star ? json(*f.E_star) : json(nullptr);
  write_json(fs::path(cfg.out_dir) / "landscape.json", j);
  fmt::print("potential {}: {} minima, E* = {}\n", model.name(), f.analysis.minima.size(),
             f.E_star ? fmt_double(*f.E_star) : std::string("none"));
  return 0;
}

int cmd_validate(const ExperimentConfig& cfg, double horizon, std::size_t checks) {
  const PotentialModel model = build_potential(cfg.potential);
  const LandscapeFacts f = landscape_facts(model);
  const CoolingSchedule sched = build_schedule(cfg.schedule, f.E_star);
  const VarianceMap var = build_variance(cfg.variance);
  const Certificate c = validate(sched, var, f.E_star.value_or(0.0), horizon > 0 ? horizon : cfg.trial.T_final, checks);
  json j = to_json(c);
  j["E"] = sched.E();
  j["E_star"] = f.E_star ? json(*f.E_star) : json(nullptr);
  write_json(fs::path(cfg.out_dir) / "certificate.json", j);
  fmt::print("schedule {}\n", c.admissible ? "admissible" : "NOT admissible");
  for (const auto& v : c.violations) fmt::print("  violation: {}\n", v);
  return c.admissible ? 0 : 3;
}

int cmd_anneal(const ExperimentConfig& cfg, std::uint64_t index) {
  const TrialReport r = run_configured_trial(cfg, index);
  write_text(fs::path(cfg.out_dir) / "trial.csv", trial_csv(r));
  write_json(fs::path(cfg.out_dir) / "trial.json",
             {{"index", r.index}, {"success", r.success}, {"diverged", r.diverged}, {"t", r.final_state.t},
              {"x", r.final_state.x}, {"y", r.final_state.y}, {"config_hash", config_hash(cfg)}});
  fmt::print("trial {}: success={} diverged={}\n", r.index, r.success, r.diverged);
  return 0;
}

int cmd_ensemble(const ExperimentConfig& cfg, std::size_t threads) {
  const EnsembleReport r = run_configured_ensemble(cfg, threads);
  write_text(fs::path(cfg.out_dir) / "ensemble.csv", ensemble_csv(r));
  json j = to_json(r, true);
  j["config_hash"] = config_hash(cfg);
  write_json(fs::path(cfg.out_dir) / "ensemble.json", j);
  fmt::print("ensemble n={} p_hat(final)={} diverged={}\n", r.n, fmt_double(r.p_hat.back()), r.diverged_count);
  return 0;
}

std::string moments_csv(const MomentSeries& m) {
  std::string s = "t,estimate,std_error,count\n";
  for (const auto& p : m.samples) {
    s += fmt::format("{},{},{},{}\n", fmt_double(p.t), fmt_double(p.estimate), fmt_double(p.std_error), p.count);
  }
  return s;
}

int cmd_dichotomy(const ExperimentConfig& cfg, std::size_t threads) {
  const StudyReport r = run_dichotomy_study(cfg, threads);
  const fs::path out(cfg.out_dir);
  write_text(out / "study.csv", study_csv(r));
  write_text(out / "moments.csv", moments_csv(r.slow_moments));
  write_json(out / "study.json", to_json(r));
  fmt::print("E* = {}  slow p_hat = {}  fast p_hat = {}\n", fmt_double(r.E_star),
             fmt_double(r.slow.ensemble.p_hat.back()), fmt_double(r.fast.ensemble.p_hat.back()));
  fmt::print("slow_converges: {}  fast_traps: {}  moment exponent: {}\n", r.slow_converges, r.fast_traps,
             fmt_double(r.slow_moments.exponent));
  return 0;
}

int cmd_baseline(const ExperimentConfig& cfg, std::size_t threads) {
  const BaselineReport r = run_baseline_comparison(cfg, threads);
  write_text(fs::path(cfg.out_dir) / "baseline.csv", baseline_csv(r));
  write_json(fs::path(cfg.out_dir) / "baseline.json", to_json(r));
  fmt::print("kinetic p_hat = {}  overdamped p_hat = {}\n", fmt_double(r.kinetic.p_hat.back()),
             fmt_double(r.overdamped.p_hat.back()));
  return 0;
}

int cmd_fokker_planck(const ExperimentConfig& cfg) {
  const fs::path out(cfg.out_dir);
  std::size_t k = 0;
  std::function<void(const DensityField&)> snap;
  if (cfg.fokker_planck.snapshots) {
    snap = [&](const DensityField& m) { write_snapshot(out / "snapshots" / fmt::format("m_{:03d}", k++), m); };
  }
  const DecayReport r = run_fokker_planck_study(cfg, snap);
  write_text(out / "decay.csv", decay_csv(r));
  json j = to_json(r);
  j["config_hash"] = config_hash(cfg);
  write_json(out / "decay.json", j);
  fmt::print("H(0) = {}  H(T) = {}  fitted exponent = {}  steps = {}\n", fmt_double(r.series.front().suite.H),
             fmt_double(r.series.back().suite.H), fmt_double(r.fitted_exponent), r.steps);
  return 0;
}

int cmd_gamma(const ExperimentConfig& cfg) {
  const GammaStudy s = run_gamma_study(cfg);
  json j = to_json(s);
  j["config_hash"] = config_hash(cfg);
  write_json(fs::path(cfg.out_dir) / "gamma.json", j);
  std::size_t failed = 0;
  for (const auto& e : s.entries) failed += e.report.interior_pass ? 0 : 1;
  std::size_t lemma_ok = 0;
  for (const auto& q : s.quadratic_lemma) lemma_ok += q.pass ? 1 : 0;
  fmt::print("gamma checks: {} of {} pass; quadratic lemma: {} of {} pass\n", s.entries.size() - failed,
             s.entries.size(), lemma_ok, s.quadratic_lemma.size());
  return 0;
}

int cmd_lyapunov(const ExperimentConfig& cfg) {
  const auto v = run_lyapunov_study(cfg);
  json j{{"reports", to_json(v)}, {"config_hash", config_hash(cfg)}};
  write_json(fs::path(cfg.out_dir) / "lyapunov.json", j);
  for (const auto& e : v) {
    fmt::print("{} eps={} rho_hat={} N_hat={} sandwich={}\n", e.potential, fmt_double(e.report.eps),
               fmt_double(e.report.rho_hat), fmt_double(e.report.N_hat), e.report.sandwich_ok);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kinetic Langevin annealing experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  Globals g;

  auto* analyze = app.add_subcommand("analyze-potential", "Minima, depths and E* of the configured potential");
  auto* vsched = app.add_subcommand("validate-schedule", "Admissibility certificate for the configured schedule");
  double horizon = 0.0;
  std::size_t checks = 200;
  vsched->add_option("--horizon", horizon, "Check horizon (default trial.T_final)");
  vsched->add_option("--checks", checks, "Number of sample times");
  auto* anneal = app.add_subcommand("anneal", "One trajectory");
  std::uint64_t index = 0;
  anneal->add_option("--trial-index", index, "Noise stream of the trajectory");
  auto* ensemble = app.add_subcommand("ensemble", "Ensemble success probability with Wilson intervals");
  auto* dich = app.add_subcommand("dichotomy", "Slow versus fast cooling study");
  auto* base = app.add_subcommand("compare-baseline", "Kinetic versus overdamped dynamics");
  auto* fp = app.add_subcommand("fokker-planck", "Deterministic density evolution and entropy decay");
  auto* gamma = app.add_subcommand("gamma-check", "Discrete Gamma-calculus inequalities");
  auto* lyap = app.add_subcommand("lyapunov-check", "Lyapunov drift witness search");
  for (auto* s : {analyze, vsched, anneal, ensemble, dich, base, fp, gamma, lyap}) add_globals(s, g);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const ExperimentConfig cfg = resolve(g);
    write_resolved(cfg);
    if (*analyze) return cmd_analyze(cfg);
    if (*vsched) return cmd_validate(cfg, horizon, checks);
    if (*anneal) return cmd_anneal(cfg, index);
    if (*ensemble) return cmd_ensemble(cfg, g.threads);
    if (*dich) return cmd_dichotomy(cfg, g.threads);
    if (*base) return cmd_baseline(cfg, g.threads);
    if (*fp) return cmd_fokker_planck(cfg);
    if (*gamma) return cmd_gamma(cfg);
    if (*lyap) return cmd_lyapunov(cfg);
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return 2;
  } catch (const AssumptionViolation& e) {
    fmt::print(stderr, "assumption violation: {}\n", e.what());
    return 3;
  } catch (const NumericalError& e) {
    fmt::print(stderr, "numerical failure: {}\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 4;
  }
  return 0;
}
