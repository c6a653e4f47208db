#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lanneal/potentials.hpp"
#include "lanneal/rng.hpp"
#include "lanneal/schedules.hpp"

namespace lanneal {

/// Point (x, y, t) of the position-velocity process. Overdamped runs leave y empty.
struct PhaseState {
  Point x;
  Point y;
  double t = 0.0;
};

enum class Scheme { splitting, euler_maruyama };
enum class Dynamics { kinetic, overdamped };

std::string to_string(Scheme s);
std::string to_string(Dynamics d);

struct IntegratorConfig {
  Scheme scheme = Scheme::splitting;
  double dt = 1e-2;
  double divergence_radius = 100.0;
};

/// dt = min(1e-2, sigma(eps0)/10); radius = 10x the domain radius.
IntegratorConfig default_integrator(const PotentialModel& model, const CoolingSchedule& sched,
                                    const VarianceMap& var);

struct StepResult {
  PhaseState state;
  /// Set when the step left the ball of radius divergence_radius or went
  /// non-finite; `state` is then the unchanged input.
  bool diverged = false;
};

/// The d normals used by step `step` of a trajectory (substep 0).
/// Steps 2p and 2p+1 draw consecutively from one word stream.
void step_normals(const CounterNoise& noise, std::uint64_t step, std::span<double> out);

/// One step of the kinetic SDE with eps and sigma frozen at state.t.
StepResult step_kinetic(const PhaseState& state, const PotentialModel& model, const CoolingSchedule& sched,
                        const VarianceMap& var, double dt, const CounterNoise& noise, std::uint64_t step,
                        double divergence_radius, Scheme scheme = Scheme::splitting);

/// Noise-free, friction-free kick-drift-kick with force scale s. Reversible:
/// negating y, stepping, and negating y again recovers the input up to round-off.
PhaseState hamiltonian_step(const PhaseState& state, const PotentialModel& model, double s, double dt);

/// Euler-Maruyama step of dZ = -grad U dt + sqrt(2 T_t) dB; uses `x` of the state.
StepResult step_overdamped(const PhaseState& state, const PotentialModel& model,
                           const std::function<double(double)>& temp_at, double dt, const CounterNoise& noise,
                           std::uint64_t step, double divergence_radius);

struct Checkpoint {
  double t = 0.0;
  double U = 0.0;
  double y2 = 0.0;
  Point x;
  Point y;
};

struct TrialReport {
  std::uint64_t index = 0;
  PhaseState final_state;
  bool success = false;
  bool diverged = false;
  std::vector<Checkpoint> checkpoints;
};

/// Draws the initial state of one trial; init draws use substep 1.
using InitSampler = std::function<PhaseState(const CounterNoise&)>;

/// Fixed position; y given, or drawn from the Gibbs velocity marginal N(0, sigma(eps0)).
InitSampler point_init(Point x, std::optional<Point> y, double sigma0);
/// x ~ N(center, eps0 H^-1) with H the Hessian at center; y ~ N(0, sigma0).
InitSampler gibbs_local_init(const PotentialModel& model, Point center, double eps0, double sigma0);

struct TrialSetup {
  const PotentialModel* model = nullptr;
  const CoolingSchedule* sched = nullptr;
  const VarianceMap* var = nullptr;
  IntegratorConfig integrator;
  Dynamics dynamics = Dynamics::kinetic;
  double T_final = 0.0;
  double delta = 0.0;
  /// Times at which to record checkpoints; recorded at the first step with t_k >= time.
  std::vector<double> checkpoints;
};

/// Integrates one trajectory with n = ceil(T/dt) uniform steps of T/n.
TrialReport run_trial(const PhaseState& init, const TrialSetup& setup, const CounterNoise& noise);
/// Convenience overload: master seed, stream 0.
TrialReport run_trial(const PhaseState& init, const PotentialModel& model, const CoolingSchedule& sched,
                      const VarianceMap& var, double T_final, const IntegratorConfig& cfg, std::uint64_t seed,
                      double delta, const std::vector<double>& checkpoints);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Wilson score interval at z = 1.959964 (95%).
Interval wilson_interval(std::size_t successes, std::size_t n, double z = 1.959963984540054);

struct EnsembleReport {
  std::size_t n = 0;
  double delta = 0.0;
  double threshold = 0.0;  // min U + delta
  std::vector<double> eval_times;
  std::vector<std::size_t> successes;
  std::vector<double> p_hat;
  std::vector<Interval> wilson;
  std::size_t diverged_count = 0;
  std::vector<TrialReport> trials;  // sorted by trial index
};

/// Runs trials 0..n-1 on `threads` workers. Results do not depend on `threads`.
/// Checkpoints are recorded at eval_times; success at each is U <= min U + delta.
EnsembleReport run_ensemble(std::size_t n, const InitSampler& init, const TrialSetup& setup,
                            std::uint64_t master_seed, std::size_t threads = 1);

struct SteeringResult {
  std::function<Point(double)> control;
  double endpoint_error = 0.0;
  PhaseState endpoint;
  double cruise_velocity_norm = 0.0;
  std::size_t rk_steps = 0;
};

/// Four-phase open-loop control driving z0 to z1 in time T: an impulse of width
/// delta_ctrl to the cruise velocity, a cruise that cancels the drift along the
/// straight reference line, a final impulse to y1, and linear joins of width
/// delta_ctrl^2. The controlled ODE x' = y, y' = F_t(x, y) + u with
/// F_t = -(sigma/eps) grad U - y/sigma is integrated by RK4.
SteeringResult steering_control(const PhaseState& z0, const PhaseState& z1, double T, double delta_ctrl,
                                const PotentialModel& model, const CoolingSchedule& sched, const VarianceMap& var);

}  // namespace lanneal
