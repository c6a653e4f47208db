#include <cmath>
#include <vector>

#include <doctest.h>

#include "lanneal/rng.hpp"

using namespace lanneal;

TEST_CASE("Philox4x32-10 known-answer vectors") {
  using C = Philox4x32::Counter;
  using K = Philox4x32::Key;
  CHECK(Philox4x32::generate(C{0, 0, 0, 0}, K{0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::generate(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}) ==
        C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::generate(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}) ==
        C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("counter noise is a pure function of its address") {
  const CounterNoise a(42, 7), b(42, 7), c(42, 8);
  std::vector<double> x(5), y(5), z(5);
  a.normals(123, 0, x);
  b.normals(123, 0, y);
  c.normals(123, 0, z);
  CHECK(x == y);
  CHECK(x != z);
  CHECK(a.uniform(5, 1) == b.uniform(5, 1));
  CHECK(a.uniform(5, 1) != a.uniform(5, 2));
}

TEST_CASE("normals have unit variance") {
  const CounterNoise n(1, 0);
  double s = 0.0, s2 = 0.0;
  const int N = 200000;
  std::vector<double> v(1);
  for (int k = 0; k < N; ++k) {
    n.normals(static_cast<std::uint64_t>(k), 0, v);
    s += v[0];
    s2 += v[0] * v[0];
  }
  CHECK(std::abs(s / N) < 0.01);
  CHECK(std::abs(s2 / N - 1.0) < 0.02);
}

TEST_CASE("open_unit stays inside (0, 1)") {
  CHECK(open_unit(0) > 0.0);
  CHECK(open_unit(~std::uint64_t{0}) < 1.0);
}
