#include <cmath>

#include <doctest.h>

#include "lanneal/error.hpp"
#include "lanneal/potentials.hpp"

using namespace lanneal;

TEST_CASE("tilted double well landscape") {
  const auto m = builtin::tilted_double_well(0.3);
  const auto a = analyze_landscape(m, m.default_grid());
  REQUIRE(a.minima.size() == 2);
  CHECK(a.global().location[0] == doctest::Approx(-1.03558).epsilon(1e-5));
  const Minimum* ng = a.deepest_nonglobal();
  REQUIRE(ng != nullptr);
  CHECK(ng->location[0] == doctest::Approx(0.96015).epsilon(1e-5));
  REQUIRE(a.critical_depth.has_value());
  CHECK(*a.critical_depth == doctest::Approx(0.717136).epsilon(1e-5));
  CHECK(ng->value - a.global().value == doctest::Approx(0.599575).epsilon(1e-5));
}

TEST_CASE("quadratic has no critical depth") {
  const auto q = builtin::quadratic(2, 1.0);
  CHECK_FALSE(critical_depth(q, q.default_grid()).has_value());
  CHECK(q.global_min_value() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("built-in growth constants verify on their domains") {
  for (const auto& m : builtin::suite()) {
    REQUIRE(m.growth().has_value());
    CHECK_MESSAGE(verify_growth(m, m.domain(), 2000).pass, m.name());
  }
}

TEST_CASE("polynomial gradient matches finite differences") {
  const auto p = builtin::polynomial(2, {{1.0, {4, 0}}, {-2.0, {2, 0}}, {0.5, {1, 1}}, {1.0, {0, 2}}},
                                     Box::cube(2, -2, 2));
  const double x[2] = {0.3, -0.7};
  double g[2];
  p.gradient(x, g);
  for (int k = 0; k < 2; ++k) {
    double xp[2] = {x[0], x[1]}, xm[2] = {x[0], x[1]};
    xp[k] += 1e-6;
    xm[k] -= 1e-6;
    CHECK(g[k] == doctest::Approx((p.energy(xp) - p.energy(xm)) / 2e-6).epsilon(1e-6));
  }
}

TEST_CASE("triple well depth uses the lowest escape") {
  const auto m = builtin::triple_well(0.3);
  const auto a = analyze_landscape(m, m.default_grid());
  CHECK(a.minima.size() == 3);
  CHECK(a.critical_depth.has_value());
}
