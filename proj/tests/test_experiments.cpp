#include <doctest.h>

#include "lanneal/error.hpp"
#include "lanneal/experiments.hpp"

using namespace lanneal;

TEST_CASE("config round-trips through JSON") {
  ExperimentConfig c;
  c.potential.name = "polynomial";
  c.potential.coefficients = {0.0, 0.3, -2.0, 0.0, 1.0};
  c.potential.growth = GrowthConstants{0.5, 2.0, 3.0, 1.0};
  c.schedule.knots = {{{0.0, 1.0}}, {{5.0, 0.5}}};
  c.gamma.eps = {0.25};
  c.ensemble.master_seed = 77;
  const auto j = to_json(c);
  const auto back = config_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(config_hash(back) == config_hash(c));
}

TEST_CASE("config parsing errors") {
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"nope": 1})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"trial": {"T_finl": 1}})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"trial": {"T_final": "x"}})")), ConfigError);
  CHECK(config_from_json(nlohmann::json::object()).trial.T_final == 1e5);
}

TEST_CASE("config hash tracks semantic fields only") {
  ExperimentConfig a, b;
  CHECK(config_hash(a) == config_hash(b));
  b.out_dir = "elsewhere";
  CHECK(config_hash(a) == config_hash(b));
  b.ensemble.master_seed += 1;
  CHECK(config_hash(a) != config_hash(b));
  ExperimentConfig c;
  c.dichotomy.c_fast = 0.41;
  CHECK(config_hash(a) != config_hash(c));
}

TEST_CASE("dichotomy preconditions") {
  ExperimentConfig c;
  c.ensemble.n = 0;
  CHECK_THROWS_AS(run_dichotomy_study(c, 1), ConfigError);
  ExperimentConfig q;
  q.potential.name = "quadratic";
  q.trial.delta = 0.1;
  try {
    run_dichotomy_study(q, 1);
    FAIL("expected a configuration error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("non-global") != std::string::npos);
  }
}

TEST_CASE("global-basin init makes the verdicts uninformative") {
  ExperimentConfig c;
  c.trial.T_final = 20.0;
  c.trial.n_checkpoints = 6;
  c.ensemble.n = 32;
  c.init.x = {-1.0};
  const auto r = run_dichotomy_study(c, 1);
  CHECK(r.init_in_global_basin);
  CHECK(r.slow_converges == "uninformative-init");
  CHECK(r.fast_traps == "uninformative-init");
}

TEST_CASE("baseline comparison on the quadratic reaches the sublevel set") {
  ExperimentConfig c;
  c.potential.name = "quadratic";
  c.schedule.E = 1.0;
  c.trial.delta = 0.2;
  c.trial.T_final = 500.0;
  c.trial.n_checkpoints = 8;
  c.init.x = {2.0};
  c.ensemble.n = 64;
  const auto r = run_baseline_comparison(c, 2);
  CHECK(r.kinetic.p_hat.back() > 0.8);
  CHECK(r.overdamped.p_hat.back() > 0.8);
  CHECK(r.kinetic.wilson.size() == r.kinetic.eval_times.size());
  CHECK(r.overdamped.wilson.size() == r.overdamped.eval_times.size());
  const auto again = run_baseline_comparison(c, 1);
  CHECK(baseline_csv(again) == baseline_csv(r));
}

TEST_CASE("log times and number formatting") {
  const auto t = log_times(1e4, 5);
  CHECK(t.front() == 1.0);
  CHECK(t.back() == 1e4);
  CHECK(t[2] == doctest::Approx(100.0));
  CHECK_THROWS_AS(log_times(1e4, 1), ConfigError);
  CHECK(fmt_double(0.1) == "0.10000000000000001");
}

TEST_CASE("random test functions are positive and reproducible") {
  const auto g = PhaseGrid::make(-2, 2, -2, 2, 16, 16);
  const auto a = random_test_function(g, 5, 3), b = random_test_function(g, 5, 3), c = random_test_function(g, 5, 4);
  CHECK(a == b);
  CHECK(a != c);
  for (double v : a) CHECK(v > 0.0);
}
