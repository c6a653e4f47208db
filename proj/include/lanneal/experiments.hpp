#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lanneal/annealer.hpp"
#include "lanneal/diagnostics.hpp"
#include "lanneal/fokker_planck.hpp"
#include "lanneal/potentials.hpp"
#include "lanneal/schedules.hpp"

namespace lanneal {

inline constexpr const char* kVersion = "1.0.0";

// ------------------------------------------------------------- configuration
// Every field has a default; zero for E, dt, delta and similar means "derive it".

struct PotentialSpec {
  std::string name = "tilted_double_well";  // quadratic | tilted_double_well | triple_well | two_well_2d | polynomial
  double kappa = 0.3;
  double c = 1.0;          // quadratic stiffness
  std::size_t dim = 1;     // quadratic / polynomial dimension
  std::vector<double> coefficients;                // 1-D polynomial, ascending powers
  std::vector<std::array<double, 3>> terms;        // (coef, power_x1, power_x2)
  std::vector<double> domain_lo{-3.0}, domain_hi{3.0};  // custom polynomials only
  std::optional<GrowthConstants> growth;           // custom polynomials only
  double scan_spacing = 0.0;
};

struct ScheduleSpec {
  std::string form = "logarithmic";  // logarithmic | constant | table
  double E = 0.0;                    // 0: E_factor * E*
  double E_factor = 1.5;
  double A = 1.0;
  double eps = 1.0;                  // constant form
  std::vector<std::array<double, 2>> knots;  // table form, (t, eps)
};

struct VarianceSpec {
  std::string form = "identity";  // identity | affine | constant
  double l = 1.0;
  double c = 0.0;                 // affine offset
  double value = 1.0;             // constant form
};

struct IntegratorSpec {
  std::string scheme = "splitting";  // splitting | euler_maruyama
  std::string dynamics = "kinetic";  // kinetic | overdamped
  double dt = 0.0;                   // 0: min(1e-2, sigma(eps0)/10)
  double divergence_radius = 0.0;    // 0: 10x the domain radius
};

struct TrialSpec {
  double T_final = 1e5;
  double delta = 0.0;           // 0: delta_fraction * (U(non-global min) - U(global min))
  double delta_fraction = 0.1;
  std::size_t n_checkpoints = 41;  // log-spaced on [1, T_final]
};

struct InitSpec {
  std::string mode = "point";  // point | gibbs-local
  std::vector<double> x;       // empty: deepest non-global minimum
  std::vector<double> y;       // empty: drawn from N(0, sigma(eps0))
};

struct EnsembleSpec {
  std::size_t n = 400;
  std::uint64_t master_seed = 20240607;
};

struct DichotomySpec {
  double c_slow = 1.5;
  double c_fast = 0.4;
};

struct FokkerPlanckSpec {
  double T = 1e4;
  std::size_t nx = 128, ny = 128;
  double x_min = -3.0, x_max = 3.0;
  double y_half_width = 0.0;  // 0: 6.5 sqrt(sigma(eps0))
  double dt = 0.0;            // 0: stable step at each temperature
  std::size_t n_checkpoints = 17;  // t = 0 plus log-spaced on [1, T]
  bool snapshots = false;
};

struct GammaSpec {
  std::vector<double> eps{1.0, 0.5};
  std::size_t n_functions = 20;
  std::size_t nx = 128, ny = 128;
  double x_min = -2.0, x_max = 2.0, y_min = -2.0, y_max = 2.0;
  double safety = 4.0;
};

struct LyapunovSpec {
  std::vector<double> eps{1.0, 0.5, 0.1};
  std::size_t n_samples = 4096;
  double y_range = 5.0;
  bool suite = false;  // true: run on every built-in potential
};

struct ExperimentConfig {
  PotentialSpec potential;
  ScheduleSpec schedule;
  VarianceSpec variance;
  IntegratorSpec integrator;
  TrialSpec trial;
  InitSpec init;
  EnsembleSpec ensemble;
  DichotomySpec dichotomy;
  FokkerPlanckSpec fokker_planck;
  GammaSpec gamma;
  LyapunovSpec lyapunov;
  std::string out_dir = "out";
};

nlohmann::json to_json(const ExperimentConfig& cfg);
/// Missing keys keep their defaults; unknown keys are a ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
/// FNV-1a 64 of the canonical (sorted, compact) JSON dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

PotentialModel build_potential(const PotentialSpec& spec);
VarianceMap build_variance(const VarianceSpec& spec);
/// E* is needed only when the schedule's E is derived from E_factor.
CoolingSchedule build_schedule(const ScheduleSpec& spec, std::optional<double> E_star);
Scheme parse_scheme(const std::string& s);
Dynamics parse_dynamics(const std::string& s);

/// Landscape facts shared by the studies.
struct LandscapeFacts {
  LandscapeAnalysis analysis;
  std::optional<double> E_star;
  const Minimum* nonglobal = nullptr;  // deepest non-global minimum
  double gap = 0.0;                    // U(nonglobal) - U(global)
};
LandscapeFacts landscape_facts(const PotentialModel& model);

/// n log-spaced times on [1, T] (n >= 2), plus nothing else.
std::vector<double> log_times(double T, std::size_t n);

// ------------------------------------------------------------------- studies

struct ArmReport {
  std::string name;
  double E = 0.0;
  double c = 0.0;
  EnsembleReport ensemble;
};

struct StudyReport {
  std::string config_hash;
  std::string version = kVersion;
  double E_star = 0.0;
  double delta = 0.0;
  Point init_x;
  bool init_in_global_basin = false;
  ArmReport slow, fast;
  std::string slow_converges;  // pass | fail | uninformative-init
  std::string fast_traps;
  MomentSeries slow_moments;   // p = 1, fitted on t >= 100
};

/// Slow arm E = c_slow E*, fast arm E = c_fast E*, both from the configured init.
/// Throws ConfigError without a non-global minimum or with n = 0.
StudyReport run_dichotomy_study(const ExperimentConfig& cfg, std::size_t threads);

/// One trajectory (trial `index`) under the configured schedule and dynamics.
TrialReport run_configured_trial(const ExperimentConfig& cfg, std::uint64_t index);
/// The configured ensemble under the configured schedule and dynamics.
EnsembleReport run_configured_ensemble(const ExperimentConfig& cfg, std::size_t threads);

struct BaselineReport {
  std::string config_hash;
  double E = 0.0;
  double delta = 0.0;
  EnsembleReport kinetic, overdamped;
};

/// Same schedule, init and seeds under kinetic and overdamped dynamics.
BaselineReport run_baseline_comparison(const ExperimentConfig& cfg, std::size_t threads);

/// Grid from the fokker_planck section; the y half-width defaults to 6.5 sqrt(sigma(eps0)).
PhaseGrid fokker_planck_grid(const ExperimentConfig& cfg, const VarianceMap& var, double eps0);

/// Density started from the local Gibbs bump at the deepest non-global minimum (1-D only),
/// evolved under the configured schedule; checkpoints at t = 0 and log-spaced on [1, T].
DecayReport run_fokker_planck_study(const ExperimentConfig& cfg,
                                    const std::function<void(const DensityField&)>& on_checkpoint = nullptr);

struct GammaEntry {
  double eps = 0.0;
  std::size_t function_index = 0;
  GammaReport report;
};

struct GammaStudy {
  std::vector<GammaEntry> entries;
  std::vector<ResidualReport> quadratic_lemma;  // one per (eps, function)
  bool all_pass = false;
};

/// Every functional on n_functions random test functions at each configured eps (1-D potentials).
GammaStudy run_gamma_study(const ExperimentConfig& cfg);

struct LyapunovEntry {
  std::string potential;
  LyapunovReport report;
};

/// Configured potential, or the whole built-in suite when lyapunov.suite is set.
std::vector<LyapunovEntry> run_lyapunov_study(const ExperimentConfig& cfg);

/// Smooth positive test function exp(sum of three random plane waves) on the grid.
std::vector<double> random_test_function(const PhaseGrid& grid, std::uint64_t seed, std::uint64_t index);

// ------------------------------------------------------------------- writers

nlohmann::json to_json(const EnsembleReport& r, bool include_trials = false);
nlohmann::json to_json(const StudyReport& r);
nlohmann::json to_json(const BaselineReport& r);
nlohmann::json to_json(const LyapunovReport& r);
nlohmann::json to_json(const GammaReport& r);
nlohmann::json to_json(const Certificate& c);
nlohmann::json to_json(const LandscapeAnalysis& a);
nlohmann::json to_json(const DecayReport& r);
nlohmann::json to_json(const GammaStudy& s);
nlohmann::json to_json(const std::vector<LyapunovEntry>& v);

/// Formats a double with 17 significant digits (round-trip exact).
std::string fmt_double(double v);
/// Writes text; creates parent directories. Throws ConfigError on I/O failure.
void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
/// Raw little-endian doubles plus a JSON header (nx, ny, box, time) beside it.
void write_snapshot(const std::filesystem::path& stem, const DensityField& m);

std::string ensemble_csv(const EnsembleReport& r);
std::string study_csv(const StudyReport& r);
std::string baseline_csv(const BaselineReport& r);
std::string trial_csv(const TrialReport& r);
std::string decay_csv(const DecayReport& r);

}  // namespace lanneal
