#include <cmath>

#include <doctest.h>

#include "lanneal/error.hpp"
#include "lanneal/schedules.hpp"

using namespace lanneal;

TEST_CASE("logarithmic schedule values") {
  const auto s = CoolingSchedule::logarithmic(2.0, 1.0);
  CHECK(s.epsilon_at(0.0) == doctest::Approx(2.0));
  CHECK(s.epsilon_at(std::exp(1.0) - 1.0) == doctest::Approx(1.0));
  CHECK(s.inverse_derivative(9.0) == doctest::Approx(1.0 / (2.0 * 10.0)));
}

TEST_CASE("certificate separates E above and below E*") {
  const auto v = VarianceMap::identity();
  CHECK(validate(CoolingSchedule::logarithmic(1.5 * 0.717), v, 0.717, 1e5, 100).admissible);
  const auto bad = validate(CoolingSchedule::logarithmic(0.4 * 0.717), v, 0.717, 1e5, 100);
  CHECK_FALSE(bad.admissible);
  CHECK_FALSE(bad.violations.empty());
}

TEST_CASE("table schedule interpolates log eps") {
  const auto s = CoolingSchedule::table({{0.0, 1.0}, {10.0, 0.25}}, 1.0);
  CHECK(s.epsilon_at(5.0) == doctest::Approx(0.5));
  CHECK(s.epsilon_at(50.0) == doctest::Approx(0.25));
}

TEST_CASE("variance maps") {
  CHECK(VarianceMap::identity().sigma(0.3) == doctest::Approx(0.3));
  CHECK(VarianceMap::affine(2.0, 0.5).sigma(0.3) == doctest::Approx(1.1));
  CHECK(VarianceMap::constant(1.0, 0.5).sigma(0.3) == doctest::Approx(1.0));
}

TEST_CASE("invalid schedules are configuration errors") {
  CHECK_THROWS_AS(CoolingSchedule::logarithmic(-1.0), ConfigError);
  CHECK_THROWS_AS(CoolingSchedule::table({{1.0, 1.0}}, 1.0), ConfigError);
}
