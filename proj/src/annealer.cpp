#include "lanneal/annealer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include <fmt/core.h>

#include "lanneal/error.hpp"

namespace lanneal {

std::string to_string(Scheme s) {
  return s == Scheme::splitting ? "splitting" : "euler-maruyama";
}

std::string to_string(Dynamics d) {
  return d == Dynamics::kinetic ? "kinetic" : "overdamped";
}

IntegratorConfig default_integrator(const PotentialModel& model, const CoolingSchedule& sched,
                                    const VarianceMap& var) {
  IntegratorConfig cfg;
  cfg.dt = std::min(1e-2, var.sigma(sched.eps0()) / 10.0);
  cfg.divergence_radius = 10.0 * model.domain().radius();
  return cfg;
}

namespace {

constexpr std::size_t kBatch = 64;
constexpr std::size_t kMaxDim = 2;

/// Gradient evaluation with an inlined Horner path for 1-D polynomials.
/// Produces the same bits as Polynomial::gradient.
class GradientEval {
 public:
  explicit GradientEval(const PotentialModel& model) : model_(model), d_(model.dim()) {
    if (const auto* poly = dynamic_cast<const Polynomial*>(&model.landscape()); poly && d_ == 1) {
      const auto& c = poly->dense_coefficients();
      for (std::size_t k = 1; k < c.size(); ++k) dcoef_.push_back(static_cast<double>(k) * c[k]);
    }
  }

  void operator()(const double* x, double* g) const {
    if (!dcoef_.empty()) {
      double acc = 0.0;
      for (std::size_t k = dcoef_.size(); k-- > 0;) acc = acc * x[0] + dcoef_[k];
      g[0] = acc;
      return;
    }
    model_.gradient(std::span<const double>(x, d_), std::span<double>(g, d_));
  }

  /// Derivative coefficients of the 1-D Horner path; empty when not applicable.
  [[nodiscard]] const std::vector<double>& derivative_coefficients() const noexcept { return dcoef_; }

 private:
  const PotentialModel& model_;
  std::size_t d_;
  std::vector<double> dcoef_;
};

struct KineticCoeffs {
  double s;      // sigma / eps
  double sigma;
  double dt;
  double a;      // e^{-dt/sigma}
  double c;      // sqrt(sigma (1 - e^{-2 dt/sigma}))
  double sqrt2dt;
};

KineticCoeffs kinetic_coeffs(const CoolingSchedule& sched, const VarianceMap& var, double t, double dt) {
  const double eps = sched.epsilon_at(t);
  const double sigma = var.sigma(eps);
  return {sigma / eps, sigma, dt, std::exp(-dt / sigma), std::sqrt(-sigma * std::expm1(-2.0 * dt / sigma)),
          std::sqrt(2.0 * dt)};
}

bool outside(const double* x, const double* y, std::size_t d, double r2) {
  double sx = 0.0, sy = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    sx += x[j] * x[j];
    sy += y[j] * y[j];
  }
  // Also catches NaN: comparisons with NaN are false.
  return !(sx <= r2) || !(sy <= r2);
}

/// One kinetic step in place. `g` holds grad U(x) and is refreshed. Returns false
/// on divergence, leaving x, y, g untouched.
template <std::size_t D, Scheme S>
inline bool kinetic_core_t(double* x, double* y, double* g, const double* xi, const KineticCoeffs& k,
                           const GradientEval& grad, double r2) {
  double xn[D], yn[D], gn[D];
  if constexpr (S == Scheme::splitting) {
    const double hk = 0.5 * k.dt * k.s;
    const double hd = 0.5 * k.dt;
    for (std::size_t j = 0; j < D; ++j) {
      double yy = y[j] - hk * g[j];
      const double xx = x[j] + hd * yy;
      yy = k.a * yy + k.c * xi[j];
      xn[j] = xx + hd * yy;
      yn[j] = yy;
    }
    grad(xn, gn);
    for (std::size_t j = 0; j < D; ++j) yn[j] -= hk * gn[j];
  } else {
    for (std::size_t j = 0; j < D; ++j) {
      xn[j] = x[j] + y[j] * k.dt;
      yn[j] = y[j] + (-k.s * g[j] - y[j] / k.sigma) * k.dt + k.sqrt2dt * xi[j];
    }
    grad(xn, gn);
  }
  if (outside(xn, yn, D, r2)) return false;
  for (std::size_t j = 0; j < D; ++j) {
    x[j] = xn[j];
    y[j] = yn[j];
    g[j] = gn[j];
  }
  return true;
}

using KineticCore = bool (*)(double*, double*, double*, const double*, const KineticCoeffs&, const GradientEval&,
                             double);

KineticCore select_core(std::size_t d, Scheme scheme) {
  if (d == 1) {
    return scheme == Scheme::splitting ? &kinetic_core_t<1, Scheme::splitting>
                                       : &kinetic_core_t<1, Scheme::euler_maruyama>;
  }
  return scheme == Scheme::splitting ? &kinetic_core_t<2, Scheme::splitting>
                                     : &kinetic_core_t<2, Scheme::euler_maruyama>;
}

bool overdamped_core(double* z, double* g, const double* xi, std::size_t d, double dt, double temp,
                     const GradientEval& grad, double r2) {
  double zn[kMaxDim], gn[kMaxDim], zero[kMaxDim] = {0.0, 0.0};
  const double amp = std::sqrt(2.0 * temp * dt);
  for (std::size_t j = 0; j < d; ++j) zn[j] = z[j] - g[j] * dt + amp * xi[j];
  grad(zn, gn);
  if (outside(zn, zero, d, r2)) return false;
  for (std::size_t j = 0; j < d; ++j) {
    z[j] = zn[j];
    g[j] = gn[j];
  }
  return true;
}

void check_state(const PhaseState& s, std::size_t d, bool need_y) {
  if (s.x.size() != d) throw ConfigError(fmt::format("state has {} position components, potential has {}", s.x.size(), d));
  if (need_y && s.y.size() != d) {
    throw ConfigError(fmt::format("state has {} velocity components, potential has {}", s.y.size(), d));
  }
  for (double v : s.x) {
    if (!std::isfinite(v)) throw ConfigError("state position is not finite");
  }
  for (double v : s.y) {
    if (!std::isfinite(v)) throw ConfigError("state velocity is not finite");
  }
}

}  // namespace

void step_normals(const CounterNoise& noise, std::uint64_t step, std::span<double> out) {
  auto w = noise.words(step >> 1, 0);
  if (step & 1) {
    for (std::size_t j = 0; j < out.size(); ++j) (void)standard_normal(w);
  }
  for (double& v : out) v = standard_normal(w);
}

StepResult step_kinetic(const PhaseState& state, const PotentialModel& model, const CoolingSchedule& sched,
                        const VarianceMap& var, double dt, const CounterNoise& noise, std::uint64_t step,
                        double divergence_radius, Scheme scheme) {
  const std::size_t d = model.dim();
  check_state(state, d, true);
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  const GradientEval grad(model);
  StepResult out{state, false};
  double g[kMaxDim], xi[kMaxDim];
  grad(state.x.data(), g);
  step_normals(noise, step, std::span<double>(xi, d));
  const auto k = kinetic_coeffs(sched, var, state.t, dt);
  if (!select_core(d, scheme)(out.state.x.data(), out.state.y.data(), g, xi, k, grad,
                               divergence_radius * divergence_radius)) {
    out.diverged = true;
    return out;
  }
  out.state.t = state.t + dt;
  return out;
}

PhaseState hamiltonian_step(const PhaseState& state, const PotentialModel& model, double s, double dt) {
  const std::size_t d = model.dim();
  check_state(state, d, true);
  PhaseState out = state;
  Point g(d);
  model.gradient(out.x, g);
  for (std::size_t j = 0; j < d; ++j) out.y[j] -= 0.5 * dt * s * g[j];
  for (std::size_t j = 0; j < d; ++j) out.x[j] += dt * out.y[j];
  model.gradient(out.x, g);
  for (std::size_t j = 0; j < d; ++j) out.y[j] -= 0.5 * dt * s * g[j];
  out.t = state.t + dt;
  return out;
}

StepResult step_overdamped(const PhaseState& state, const PotentialModel& model,
                           const std::function<double(double)>& temp_at, double dt, const CounterNoise& noise,
                           std::uint64_t step, double divergence_radius) {
  const std::size_t d = model.dim();
  check_state(state, d, false);
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  const double temp = temp_at(state.t);
  if (!(temp >= 0.0)) throw ConfigError("temperature must be non-negative");
  const GradientEval grad(model);
  StepResult out{state, false};
  double g[kMaxDim], xi[kMaxDim];
  grad(state.x.data(), g);
  step_normals(noise, step, std::span<double>(xi, d));
  if (!overdamped_core(out.state.x.data(), g, xi, d, dt, temp, grad, divergence_radius * divergence_radius)) {
    out.diverged = true;
    return out;
  }
  out.state.t = state.t + dt;
  return out;
}

// -- initial conditions --------------------------------------------------------------

InitSampler point_init(Point x, std::optional<Point> y, double sigma0) {
  if (y && y->size() != x.size()) throw ConfigError("init.y must have the same length as init.x");
  if (!(sigma0 > 0.0)) throw ConfigError("initial velocity variance must be positive");
  return [x = std::move(x), y = std::move(y), sigma0](const CounterNoise& noise) {
    PhaseState s;
    s.x = x;
    if (y) {
      s.y = *y;
    } else {
      auto w = noise.words(0, 1);
      const double sd = std::sqrt(sigma0);
      for (std::size_t j = 0; j < x.size(); ++j) s.y.push_back(sd * standard_normal(w));
    }
    return s;
  };
}

InitSampler gibbs_local_init(const PotentialModel& model, Point center, double eps0, double sigma0) {
  const std::size_t d = model.dim();
  if (center.size() != d) throw ConfigError("init center dimension does not match the potential");
  if (!(eps0 > 0.0) || !(sigma0 > 0.0)) throw ConfigError("init temperatures must be positive");
  Point h(d * d);
  model.hessian(center, h);
  // Lower Cholesky factor of eps0 * H^{-1}.
  std::array<double, 4> chol{0.0, 0.0, 0.0, 0.0};
  if (d == 1) {
    if (!(h[0] > 0.0)) throw AssumptionViolation("gibbs-local init: Hessian at the center is not positive");
    chol[0] = std::sqrt(eps0 / h[0]);
  } else {
    const double det = h[0] * h[3] - h[1] * h[2];
    if (!(h[0] > 0.0) || !(det > 0.0)) {
      throw AssumptionViolation("gibbs-local init: Hessian at the center is not positive definite");
    }
    const double c00 = eps0 * h[3] / det, c01 = -eps0 * h[1] / det, c11 = eps0 * h[0] / det;
    chol[0] = std::sqrt(c00);
    chol[2] = c01 / chol[0];
    chol[3] = std::sqrt(c11 - chol[2] * chol[2]);
  }
  return [center = std::move(center), chol, d, sigma0](const CounterNoise& noise) {
    auto w = noise.words(0, 1);
    double zx[kMaxDim], zy[kMaxDim];
    for (std::size_t j = 0; j < d; ++j) zx[j] = standard_normal(w);
    for (std::size_t j = 0; j < d; ++j) zy[j] = standard_normal(w);
    PhaseState s;
    s.x = center;
    s.x[0] += chol[0] * zx[0];
    if (d == 2) s.x[1] += chol[2] * zx[0] + chol[3] * zx[1];
    const double sd = std::sqrt(sigma0);
    for (std::size_t j = 0; j < d; ++j) s.y.push_back(sd * zy[j]);
    return s;
  };
}

// -- trials -----------------------------------------------------------------------------

namespace {

struct StepPlan {
  std::uint64_t n = 0;
  double dt = 0.0;
  std::vector<std::uint64_t> record_steps;  // sorted, unique
};

StepPlan plan_steps(const TrialSetup& s) {
  if (!s.model || !s.sched || !s.var) throw ConfigError("trial setup is missing model, schedule or variance");
  if (!(s.T_final >= 0.0) || !std::isfinite(s.T_final)) throw ConfigError("T_final must be non-negative");
  if (!(s.delta > 0.0)) throw ConfigError("delta must be positive");
  if (!(s.integrator.dt > 0.0)) throw ConfigError("integrator.dt must be positive");
  if (!(s.integrator.divergence_radius > 0.0)) throw ConfigError("divergence radius must be positive");
  StepPlan p;
  if (s.T_final > 0.0) {
    p.n = static_cast<std::uint64_t>(std::ceil(s.T_final / s.integrator.dt * (1.0 - 1e-12)));
    p.n = std::max<std::uint64_t>(p.n, 1);
    p.dt = s.T_final / static_cast<double>(p.n);
  }
  for (double c : s.checkpoints) {
    if (!(c >= 0.0) || c > s.T_final * (1.0 + 1e-12)) {
      throw ConfigError(fmt::format("checkpoint time {} is outside [0, T_final]", c));
    }
    std::uint64_t k = 0;
    if (p.n > 0) {
      k = static_cast<std::uint64_t>(std::max(0.0, std::ceil(c / p.dt - 1e-9)));
      k = std::min(k, p.n);
    }
    p.record_steps.push_back(k);
  }
  std::sort(p.record_steps.begin(), p.record_steps.end());
  p.record_steps.erase(std::unique(p.record_steps.begin(), p.record_steps.end()), p.record_steps.end());
  return p;
}

/// Simulates a batch of trials in lock step. Step coefficients are shared.
void simulate_batch(const TrialSetup& s, const StepPlan& plan, std::span<const CounterNoise> noise,
                    std::span<const PhaseState> init, std::span<TrialReport> out) {
  const PotentialModel& model = *s.model;
  const std::size_t d = model.dim();
  const std::size_t B = noise.size();
  const bool kinetic = s.dynamics == Dynamics::kinetic;
  const GradientEval grad(model);
  const KineticCore core = select_core(d, s.integrator.scheme);
  const double r2 = s.integrator.divergence_radius * s.integrator.divergence_radius;

  std::vector<double> X(B * d), Y(B * d, 0.0), G(B * d);
  std::vector<char> active(B, 1);
  std::vector<PhiloxWords> words;
  words.reserve(B);
  for (std::size_t b = 0; b < B; ++b) {
    check_state(init[b], d, kinetic);
    std::copy(init[b].x.begin(), init[b].x.end(), X.begin() + static_cast<std::ptrdiff_t>(b * d));
    if (kinetic) std::copy(init[b].y.begin(), init[b].y.end(), Y.begin() + static_cast<std::ptrdiff_t>(b * d));
    grad(&X[b * d], &G[b * d]);
    words.push_back(noise[b].words(0, 0));
    out[b] = TrialReport{};
    out[b].index = noise[b].stream();
    if (outside(&X[b * d], &Y[b * d], d, r2)) {
      active[b] = 0;
      out[b].diverged = true;
    }
  }

  auto record = [&](double t) {
    for (std::size_t b = 0; b < B; ++b) {
      if (!active[b]) continue;
      Checkpoint c;
      c.t = t;
      c.x.assign(X.begin() + static_cast<std::ptrdiff_t>(b * d), X.begin() + static_cast<std::ptrdiff_t>((b + 1) * d));
      c.U = model.energy(c.x);
      if (kinetic) {
        c.y.assign(Y.begin() + static_cast<std::ptrdiff_t>(b * d), Y.begin() + static_cast<std::ptrdiff_t>((b + 1) * d));
        for (double v : c.y) c.y2 += v * v;
      }
      out[b].checkpoints.push_back(std::move(c));
    }
  };

  // Structure-of-arrays path for the common 1-D polynomial case; the arithmetic
  // matches kinetic_core_t<1, splitting> operation for operation.
  const auto& dc = grad.derivative_coefficients();
  const bool soa = kinetic && d == 1 && s.integrator.scheme == Scheme::splitting && !dc.empty();
  std::vector<double> XI(soa ? B : 0), XN(soa ? B : 0), YN(soa ? B : 0), GN(soa ? B : 0);

  std::size_t next_record = 0;
  double xi[kMaxDim];
  for (std::uint64_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * plan.dt;
    while (next_record < plan.record_steps.size() && plan.record_steps[next_record] == k) {
      record(t);
      ++next_record;
    }
    if (k == plan.n) break;
    if (soa) {
      const auto c = kinetic_coeffs(*s.sched, *s.var, t, plan.dt);
      const double hk = 0.5 * c.dt * c.s;
      const double hd = 0.5 * c.dt;
      for (std::size_t b = 0; b < B; ++b) {
        if (!active[b]) {
          XI[b] = 0.0;
          continue;
        }
        if ((k & 1) == 0) words[b] = noise[b].words(k >> 1, 0);
        XI[b] = standard_normal(words[b]);
      }
      for (std::size_t b = 0; b < B; ++b) {
        double yy = Y[b] - hk * G[b];
        const double xx = X[b] + hd * yy;
        yy = c.a * yy + c.c * XI[b];
        XN[b] = xx + hd * yy;
        YN[b] = yy;
        GN[b] = 0.0;
      }
      for (std::size_t kk = dc.size(); kk-- > 0;) {
        const double coef = dc[kk];
        for (std::size_t b = 0; b < B; ++b) GN[b] = GN[b] * XN[b] + coef;
      }
      for (std::size_t b = 0; b < B; ++b) {
        const double yn = YN[b] - hk * GN[b];
        if (!active[b]) continue;
        if (XN[b] * XN[b] <= r2 && yn * yn <= r2) {
          X[b] = XN[b];
          Y[b] = yn;
          G[b] = GN[b];
        } else {
          active[b] = 0;
          out[b].diverged = true;
        }
      }
    } else if (kinetic) {
      const auto coeffs = kinetic_coeffs(*s.sched, *s.var, t, plan.dt);
      for (std::size_t b = 0; b < B; ++b) {
        if (!active[b]) continue;
        if ((k & 1) == 0) words[b] = noise[b].words(k >> 1, 0);
        for (std::size_t j = 0; j < d; ++j) xi[j] = standard_normal(words[b]);
        if (!core(&X[b * d], &Y[b * d], &G[b * d], xi, coeffs, grad, r2)) {
          active[b] = 0;
          out[b].diverged = true;
        }
      }
    } else {
      const double temp = s.sched->epsilon_at(t);
      for (std::size_t b = 0; b < B; ++b) {
        if (!active[b]) continue;
        if ((k & 1) == 0) words[b] = noise[b].words(k >> 1, 0);
        for (std::size_t j = 0; j < d; ++j) xi[j] = standard_normal(words[b]);
        if (!overdamped_core(&X[b * d], &G[b * d], xi, d, plan.dt, temp, grad, r2)) {
          active[b] = 0;
          out[b].diverged = true;
        }
      }
    }
  }

  const double threshold = model.global_min_value() + s.delta;
  for (std::size_t b = 0; b < B; ++b) {
    auto& r = out[b];
    r.final_state.x.assign(X.begin() + static_cast<std::ptrdiff_t>(b * d), X.begin() + static_cast<std::ptrdiff_t>((b + 1) * d));
    if (kinetic) {
      r.final_state.y.assign(Y.begin() + static_cast<std::ptrdiff_t>(b * d), Y.begin() + static_cast<std::ptrdiff_t>((b + 1) * d));
    }
    // A diverged trial keeps its last good state but reports the time it stopped at.
    r.final_state.t = r.diverged ? (r.checkpoints.empty() ? 0.0 : r.checkpoints.back().t) : s.T_final;
    r.success = !r.diverged && model.energy(r.final_state.x) <= threshold;
  }
}

}  // namespace

TrialReport run_trial(const PhaseState& init, const TrialSetup& setup, const CounterNoise& noise) {
  const auto plan = plan_steps(setup);
  TrialReport out;
  simulate_batch(setup, plan, std::span<const CounterNoise>(&noise, 1), std::span<const PhaseState>(&init, 1),
                 std::span<TrialReport>(&out, 1));
  return out;
}

TrialReport run_trial(const PhaseState& init, const PotentialModel& model, const CoolingSchedule& sched,
                      const VarianceMap& var, double T_final, const IntegratorConfig& cfg, std::uint64_t seed,
                      double delta, const std::vector<double>& checkpoints) {
  TrialSetup setup{&model, &sched, &var, cfg, Dynamics::kinetic, T_final, delta, checkpoints};
  return run_trial(init, setup, CounterNoise(seed, 0));
}

Interval wilson_interval(std::size_t successes, std::size_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  // Endpoints are exact at p = 0 and p = 1; the formula leaves round-off there.
  const double lo = successes == 0 ? 0.0 : std::max(0.0, centre - half);
  const double hi = successes == n ? 1.0 : std::min(1.0, centre + half);
  return {lo, hi};
}

EnsembleReport run_ensemble(std::size_t n, const InitSampler& init, const TrialSetup& setup,
                            std::uint64_t master_seed, std::size_t threads) {
  if (n == 0) throw ConfigError("ensemble.n must be at least 1");
  if (!init) throw ConfigError("ensemble needs an initial-condition sampler");
  const auto plan = plan_steps(setup);

  EnsembleReport rep;
  rep.n = n;
  rep.delta = setup.delta;
  rep.threshold = setup.model->global_min_value() + setup.delta;
  rep.trials.resize(n);

  const std::size_t batches = (n + kBatch - 1) / kBatch;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t bi = next.fetch_add(1);
      if (bi >= batches) return;
      try {
        const std::size_t lo = bi * kBatch;
        const std::size_t hi = std::min(n, lo + kBatch);
        std::vector<CounterNoise> noise;
        std::vector<PhaseState> starts;
        for (std::size_t i = lo; i < hi; ++i) {
          noise.emplace_back(master_seed, i);
          starts.push_back(init(noise.back()));
        }
        simulate_batch(setup, plan, noise, starts, std::span<TrialReport>(rep.trials.data() + lo, hi - lo));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(batches);
        return;
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, batches);
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  const std::size_t m = plan.record_steps.size();
  for (std::size_t i = 0; i < m; ++i) rep.eval_times.push_back(static_cast<double>(plan.record_steps[i]) * plan.dt);
  rep.successes.assign(m, 0);
  for (const auto& tr : rep.trials) {
    if (tr.diverged) ++rep.diverged_count;
    for (std::size_t i = 0; i < tr.checkpoints.size() && i < m; ++i) {
      // A diverged trial stops recording; its later times count as failures.
      if (tr.checkpoints[i].U <= rep.threshold) ++rep.successes[i];
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    rep.p_hat.push_back(static_cast<double>(rep.successes[i]) / static_cast<double>(n));
    rep.wilson.push_back(wilson_interval(rep.successes[i], n));
  }
  return rep;
}

// -- steering control ------------------------------------------------------------------

namespace {

/// Piecewise-linear reference acceleration with closed-form velocity and position.
struct Reference {
  std::size_t d = 1;
  std::array<double, 6> knots{};  // 0, t1, t2, t3, t4, T
  Point a1, a2, x0, y0;
  // Position and velocity at each knot.
  std::vector<Point> xk, yk;

  /// Acceleration on piece p at local time tau: alpha + beta * tau.
  void piece(std::size_t p, std::size_t j, double& alpha, double& beta) const {
    const double w = knots[2] - knots[1];
    switch (p) {
      case 0: alpha = a1[j]; beta = 0.0; return;
      case 1: alpha = a1[j]; beta = -a1[j] / w; return;
      case 2: alpha = 0.0; beta = 0.0; return;
      case 3: alpha = 0.0; beta = a2[j] / w; return;
      default: alpha = a2[j]; beta = 0.0; return;
    }
  }

  void build() {
    xk.assign(6, Point(d));
    yk.assign(6, Point(d));
    xk[0] = x0;
    yk[0] = y0;
    for (std::size_t p = 0; p < 5; ++p) {
      const double tau = knots[p + 1] - knots[p];
      for (std::size_t j = 0; j < d; ++j) {
        double al, be;
        piece(p, j, al, be);
        yk[p + 1][j] = yk[p][j] + al * tau + be * tau * tau / 2.0;
        xk[p + 1][j] = xk[p][j] + yk[p][j] * tau + al * tau * tau / 2.0 + be * tau * tau * tau / 6.0;
      }
    }
  }

  [[nodiscard]] std::size_t locate(double t) const {
    for (std::size_t p = 0; p < 4; ++p) {
      if (t < knots[p + 1]) return p;
    }
    return 4;
  }

  void eval(double t, std::span<double> x, std::span<double> y, std::span<double> a) const {
    const std::size_t p = locate(t);
    const double tau = t - knots[p];
    for (std::size_t j = 0; j < d; ++j) {
      double al, be;
      piece(p, j, al, be);
      a[j] = al + be * tau;
      y[j] = yk[p][j] + al * tau + be * tau * tau / 2.0;
      x[j] = xk[p][j] + yk[p][j] * tau + al * tau * tau / 2.0 + be * tau * tau * tau / 6.0;
    }
  }
};

}  // namespace

SteeringResult steering_control(const PhaseState& z0, const PhaseState& z1, double T, double delta_ctrl,
                                const PotentialModel& model, const CoolingSchedule& sched, const VarianceMap& var) {
  const std::size_t d = model.dim();
  check_state(z0, d, true);
  check_state(z1, d, true);
  const double dl = delta_ctrl;
  if (!(T > 0.0)) throw ConfigError("steering horizon T must be positive");
  if (!(dl > 0.0) || !(T > 2.0 * (dl + dl * dl))) {
    throw ConfigError("steering requires 0 < delta_ctrl and 2 (delta + delta^2) < T");
  }

  auto ref = std::make_shared<Reference>();
  ref->d = d;
  ref->knots = {0.0, dl, dl + dl * dl, T - dl - dl * dl, T - dl, T};
  ref->x0 = z0.x;
  ref->y0 = z0.y;
  ref->a1.resize(d);
  ref->a2.resize(d);
  // Cruise velocity from the first-order impulse model (linear velocity ramps of
  // width delta at both ends); the delta^2 joins are left uncompensated.
  double vnorm = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double v = (z1.x[j] - z0.x[j] - 0.5 * (z0.y[j] + z1.y[j]) * dl) / (T - dl);
    const double width = dl + 0.5 * dl * dl;
    ref->a1[j] = (v - z0.y[j]) / width;
    ref->a2[j] = (z1.y[j] - v) / width;
    vnorm += v * v;
  }
  ref->build();

  auto drift = [&model, &sched, &var, d](double t, const double* x, const double* y, double* f) {
    const double eps = sched.epsilon_at(t);
    const double sigma = var.sigma(eps);
    const double s = sigma / eps;
    double g[kMaxDim];
    model.gradient(std::span<const double>(x, d), std::span<double>(g, d));
    for (std::size_t j = 0; j < d; ++j) f[j] = -s * g[j] - y[j] / sigma;
  };

  SteeringResult res;
  res.control = [ref, drift, d](double t) {
    double x[kMaxDim], y[kMaxDim], a[kMaxDim], f[kMaxDim];
    ref->eval(t, std::span<double>(x, d), std::span<double>(y, d), std::span<double>(a, d));
    drift(t, x, y, f);
    Point u(d);
    for (std::size_t j = 0; j < d; ++j) u[j] = a[j] - f[j];
    return u;
  };
  res.cruise_velocity_norm = std::sqrt(vnorm);

  // RK4 on z = (x, y), with step boundaries aligned to the control's breakpoints.
  const std::size_t n2 = 2 * d;
  std::vector<double> z(n2), k1(n2), k2(n2), k3(n2), k4(n2), tmp(n2);
  for (std::size_t j = 0; j < d; ++j) {
    z[j] = z0.x[j];
    z[d + j] = z0.y[j];
  }
  auto rhs = [&](double t, const std::vector<double>& zz, std::vector<double>& out) {
    const Point u = res.control(t);
    double f[kMaxDim];
    drift(t, zz.data(), zz.data() + d, f);
    for (std::size_t j = 0; j < d; ++j) {
      out[j] = zz[d + j];
      out[d + j] = f[j] + u[j];
    }
  };
  for (std::size_t p = 0; p < 5; ++p) {
    const double t0 = ref->knots[p];
    const double len = ref->knots[p + 1] - t0;
    if (!(len > 0.0)) continue;
    const double hmax = std::min(1e-5, len / 20.0);
    const auto steps = static_cast<std::size_t>(std::ceil(len / hmax));
    const double h = len / static_cast<double>(steps);
    for (std::size_t i = 0; i < steps; ++i) {
      // Stage times stay inside the piece so the control is evaluated on the right branch.
      const double t = t0 + static_cast<double>(i) * h;
      const double tm = t + 0.5 * h;
      const double te = std::min(t + h, std::nextafter(ref->knots[p + 1], t0));
      rhs(t, z, k1);
      for (std::size_t j = 0; j < n2; ++j) tmp[j] = z[j] + 0.5 * h * k1[j];
      rhs(tm, tmp, k2);
      for (std::size_t j = 0; j < n2; ++j) tmp[j] = z[j] + 0.5 * h * k2[j];
      rhs(tm, tmp, k3);
      for (std::size_t j = 0; j < n2; ++j) tmp[j] = z[j] + h * k3[j];
      rhs(te, tmp, k4);
      for (std::size_t j = 0; j < n2; ++j) z[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
      ++res.rk_steps;
    }
    for (double v : z) {
      if (!std::isfinite(v)) throw NumericalError("steering dynamics became non-finite");
    }
  }
  double err2 = 0.0;
  res.endpoint.x.assign(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(d));
  res.endpoint.y.assign(z.begin() + static_cast<std::ptrdiff_t>(d), z.end());
  res.endpoint.t = T;
  for (std::size_t j = 0; j < d; ++j) {
    err2 += (z[j] - z1.x[j]) * (z[j] - z1.x[j]) + (z[d + j] - z1.y[j]) * (z[d + j] - z1.y[j]);
  }
  res.endpoint_error = std::sqrt(err2);
  return res;
}

}  // namespace lanneal
