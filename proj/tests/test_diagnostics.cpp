#include <cmath>
#include <vector>

#include <doctest.h>

#include "lanneal/diagnostics.hpp"
#include "lanneal/error.hpp"

using namespace lanneal;

TEST_CASE("Gamma functionals on an exponential test function") {
  const auto q = builtin::quadratic(1, 1.0);
  const auto v = VarianceMap::identity();
  const auto grid = PhaseGrid::make(-2, 2, -2, 2, 64, 64);
  const DiscreteGenerator gen(q, v, 1.0, grid, Stencil::centered);
  const double a = 0.3, b = -0.7;
  std::vector<double> h(grid.size());
  for (std::size_t i = 0; i < grid.nx; ++i) {
    for (std::size_t j = 0; j < grid.ny; ++j) {
      h[grid.index(i, j)] = std::exp(a * grid.x(static_cast<std::ptrdiff_t>(i)) + b * grid.y(static_cast<std::ptrdiff_t>(j)));
    }
  }
  for (auto w : {GammaFunctional::Phi0, GammaFunctional::Phi1, GammaFunctional::Phi2, GammaFunctional::Psi}) {
    CHECK_MESSAGE(gamma_check(h, gen, w).interior_pass, to_string(w));
  }
  // Closed-form Psi slack at the reported minimiser.
  const auto r = gamma_check(h, gen, GammaFunctional::Psi);
  const double c = 1.0 / gen.sigma() - gen.s() * 2.0;
  const double beta = gamma_beta(gen);
  const double hv = h[grid.index(r.argmin_i, r.argmin_j)];
  const double exact = hv * ((a + b) * (a + c * b) + 0.5 * beta * b * b - 0.5 * (a * a + b * b));
  CHECK(r.min_slack == doctest::Approx(exact).epsilon(2e-2));
  CHECK(quadratic_lemma_check(h, gen).pass);
  CHECK(carre_du_champ_check(h, gen).pass);
}

TEST_CASE("functional names round-trip") {
  for (auto w : {GammaFunctional::Phi0, GammaFunctional::Phi1, GammaFunctional::Phi2, GammaFunctional::Psi}) {
    CHECK(parse_gamma_functional(to_string(w)) == w);
  }
  CHECK_THROWS_AS(parse_gamma_functional("Phi9"), ConfigError);
}

TEST_CASE("Gibbs tail matches the Gaussian closed form") {
  const auto q = builtin::quadratic(1, 1.0);
  const auto t = gibbs_tail(q, 0.5, 1.0, GridSpec{Box::cube(1, -3, 3), 1e-3});
  const double exact = std::erfc(1.0 / std::sqrt(0.5)) / std::erf(3.0 / std::sqrt(0.5));
  CHECK(t.tail_mass == doctest::Approx(exact).epsilon(1e-5));
  CHECK(t.Z == doctest::Approx(std::sqrt(std::acos(-1.0) * 0.5) * std::erf(3.0 / std::sqrt(0.5))).epsilon(1e-6));
}

TEST_CASE("Lyapunov drift witness on the double well") {
  const auto m = builtin::tilted_double_well(0.3);
  const auto v = VarianceMap::identity();
  for (double eps : {1.0, 0.5, 0.1}) {
    const auto r = check_lyapunov_drift(m, v, eps, 2048);
    CHECK(r.rho_hat > 0.0);
    CHECK(std::isfinite(r.N_hat));
    CHECK(r.sandwich_ok);
  }
}

TEST_CASE("Lyapunov needs growth constants") {
  const auto m = builtin::polynomial(1, {{1.0, {2, 0}}}, Box::cube(1, -2, 2));
  CHECK_THROWS_AS(LyapunovParams::from(m, VarianceMap::identity()), ConfigError);
}

TEST_CASE("growth exponent of a power law") {
  std::vector<MomentSample> s;
  for (int k = 0; k <= 20; ++k) {
    const double t = std::pow(10.0, k / 4.0);
    s.push_back({t, 3.0 * std::pow(1.0 + t, 0.25), 0.0, 10});
  }
  CHECK(fit_growth_exponent(s) == doctest::Approx(0.25).epsilon(1e-9));
  CHECK_THROWS_AS(fit_growth_exponent({s[0], s[1]}), ConfigError);
}
