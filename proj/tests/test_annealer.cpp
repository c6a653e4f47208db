#include <cmath>

#include <doctest.h>

#include "lanneal/annealer.hpp"
#include "lanneal/error.hpp"

using namespace lanneal;

TEST_CASE("Hamiltonian step is reversible") {
  const auto m = builtin::tilted_double_well(0.3);
  PhaseState z{{0.4}, {0.8}, 0.0};
  PhaseState w = z;
  for (int k = 0; k < 100; ++k) w = hamiltonian_step(w, m, 1.0, 1e-2);
  w.y[0] = -w.y[0];
  for (int k = 0; k < 100; ++k) w = hamiltonian_step(w, m, 1.0, 1e-2);
  CHECK(w.x[0] == doctest::Approx(z.x[0]).epsilon(1e-10));
  CHECK(-w.y[0] == doctest::Approx(z.y[0]).epsilon(1e-10));
}

TEST_CASE("Wilson interval") {
  const Interval w = wilson_interval(50, 100);
  CHECK(w.lo == doctest::Approx(0.4038).epsilon(1e-3));
  CHECK(w.hi == doctest::Approx(0.5962).epsilon(1e-3));
  CHECK(wilson_interval(0, 10).lo == 0.0);
  CHECK(wilson_interval(10, 10).hi == 1.0);
}

TEST_CASE("ensemble results do not depend on the thread count") {
  const auto m = builtin::tilted_double_well(0.3);
  const auto s = CoolingSchedule::logarithmic(1.0);
  const auto v = VarianceMap::identity();
  TrialSetup setup;
  setup.model = &m;
  setup.sched = &s;
  setup.var = &v;
  setup.integrator = default_integrator(m, s, v);
  setup.T_final = 20.0;
  setup.delta = 0.06;
  setup.checkpoints = {1.0, 5.0, 20.0};
  const auto init = point_init({0.96}, std::nullopt, v.sigma(s.eps0()));
  const auto a = run_ensemble(130, init, setup, 9, 1);
  const auto b = run_ensemble(130, init, setup, 9, 3);
  CHECK(a.successes == b.successes);
  for (std::size_t k = 0; k < a.trials.size(); ++k) {
    CHECK(a.trials[k].final_state.x == b.trials[k].final_state.x);
    CHECK(a.trials[k].final_state.y == b.trials[k].final_state.y);
  }
  CHECK_THROWS_AS(run_ensemble(0, init, setup, 9, 1), ConfigError);
}

TEST_CASE("single trial matches the ensemble member with the same stream") {
  const auto m = builtin::tilted_double_well(0.3);
  const auto s = CoolingSchedule::logarithmic(1.0);
  const auto v = VarianceMap::identity();
  TrialSetup setup;
  setup.model = &m;
  setup.sched = &s;
  setup.var = &v;
  setup.integrator = default_integrator(m, s, v);
  setup.T_final = 10.0;
  setup.delta = 0.06;
  setup.checkpoints = {1.0, 10.0};
  const auto init = point_init({0.96}, std::nullopt, v.sigma(s.eps0()));
  const auto e = run_ensemble(5, init, setup, 3, 1);
  const CounterNoise noise(3, 4);
  const auto t = run_trial(init(noise), setup, noise);
  CHECK(t.final_state.x == e.trials[4].final_state.x);
}

TEST_CASE("steering error shrinks with the control width") {
  const auto m = builtin::tilted_double_well(0.3);
  const auto s = CoolingSchedule::logarithmic(1.0);
  const auto v = VarianceMap::identity();
  const PhaseState z0{{-1.0}, {0.5}, 0.0}, z1{{1.2}, {-0.3}, 0.0};
  double prev = 1e300;
  for (double d : {1e-1, 1e-2, 1e-3}) {
    const auto r = steering_control(z0, z1, 1.0, d, m, s, v);
    CHECK(r.endpoint_error < prev);
    prev = r.endpoint_error;
  }
  CHECK(prev < 1e-2);
}
