#include <cmath>
#include <vector>

#include <doctest.h>

#include "lanneal/error.hpp"
#include "lanneal/fokker_planck.hpp"

using namespace lanneal;

namespace {
const PotentialModel& dw() {
  static const auto m = builtin::tilted_double_well(0.3);
  return m;
}
}  // namespace

TEST_CASE("discrete Gibbs density is stationary and mass is conserved") {
  const auto v = VarianceMap::identity();
  const double eps = 1.0;
  const auto grid = PhaseGrid::make(-3, 3, -6.5, 6.5, 48, 48);
  const auto mu = gibbs_density(dw(), v, eps, grid);
  const auto m1 = evolve(mu, dw(), CoolingSchedule::constant(eps), v, 0.5);
  double l1 = 0.0;
  for (std::size_t c = 0; c < mu.values.size(); ++c) l1 += std::abs(m1.values[c] - mu.values[c]);
  CHECK(l1 * grid.cell_area() < 1e-12);
  CHECK(m1.mass() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("backward operator kills constants and is dual to the forward one") {
  const auto v = VarianceMap::identity();
  const auto grid = PhaseGrid::make(-3, 3, -6.5, 6.5, 32, 32);
  const DiscreteGenerator gen(dw(), v, 0.8, grid);
  std::vector<double> one(grid.size(), 1.0), out(grid.size());
  gen.apply_L(one, out);
  for (double x : out) CHECK(std::abs(x) < 1e-10);
  std::vector<double> f(grid.size()), g(grid.size()), Lf(grid.size()), Lsg(grid.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    f[k] = std::sin(0.37 * static_cast<double>(k));
    g[k] = std::cos(0.11 * static_cast<double>(k));
  }
  gen.apply_L(f, Lf);
  gen.apply_Lstar(g, Lsg);
  double a = 0.0, b = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    a += gen.mu()[k] * Lf[k] * g[k];
    b += gen.mu()[k] * f[k] * Lsg[k];
  }
  CHECK(a == doctest::Approx(b).epsilon(1e-10));
}

TEST_CASE("entropy functionals vanish at equilibrium and satisfy Pinsker") {
  const auto v = VarianceMap::identity();
  const auto grid = PhaseGrid::make(-3, 3, -6.5, 6.5, 48, 48);
  const auto mu = gibbs_density(dw(), v, 1.0, grid);
  const auto s0 = entropy_suite(mu, dw(), v, 1.0);
  CHECK(std::abs(s0.Ent) < 1e-12);
  CHECK(std::abs(s0.L1) < 1e-12);
  const auto m = local_gibbs_density(dw(), v, 1.0, 0.96, grid);
  const auto s = entropy_suite(m, dw(), v, 1.0);
  CHECK(s.Ent > 0.0);
  CHECK(s.L1 <= std::sqrt(2.0 * s.Ent) + 1e-12);
  CHECK(s.H >= s.Ent);
}

TEST_CASE("too small a grid box is a numerical error") {
  const auto v = VarianceMap::identity();
  CHECK_THROWS_AS(gibbs_density(dw(), v, 1.0, PhaseGrid::make(-3, 3, -1, 1, 32, 32)), NumericalError);
  CHECK_THROWS_AS(PhaseGrid::make(-3, 3, -1, 1, 4, 32), ConfigError);
}

TEST_CASE("short relaxation decreases the entropy") {
  const auto v = VarianceMap::identity();
  const auto grid = PhaseGrid::make(-3, 3, -6.5, 6.5, 48, 48);
  const auto m0 = local_gibbs_density(dw(), v, 1.0, 0.96, grid);
  const auto r = decay_study(m0, dw(), CoolingSchedule::constant(1.0), v, 0.717, {0.0, 1.0, 4.0});
  REQUIRE(r.series.size() == 3);
  CHECK(r.series[2].suite.Ent < r.series[1].suite.Ent);
  CHECK(r.series[1].suite.Ent < r.series[0].suite.Ent);
}
