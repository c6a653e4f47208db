#include "lanneal/rng.hpp"

#include <boost/random/normal_distribution.hpp>

namespace lanneal {

double standard_normal(PhiloxWords& words) {
  // Boost's unit normal is a ziggurat; it keeps no state between calls.
  boost::random::normal_distribution<double> dist(0.0, 1.0);
  return dist(words);
}

CounterNoise::CounterNoise(std::uint64_t master_seed, std::uint64_t stream) noexcept
    : seed_(master_seed),
      stream_(stream),
      key_{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32)} {}

PhiloxWords CounterNoise::words(std::uint64_t step, std::uint32_t substep) const noexcept {
  // Word 1 layout: 16 high step bits, 8 substep bits, 8 block bits (advanced by PhiloxWords).
  const Philox4x32::Counter ctr{
      static_cast<std::uint32_t>(step),
      static_cast<std::uint32_t>((step >> 32) & 0xFFFFu) | ((substep & 0xFFu) << 16),
      static_cast<std::uint32_t>(stream_),
      static_cast<std::uint32_t>(stream_ >> 32),
  };
  return PhiloxWords(ctr, key_);
}

void CounterNoise::normals(std::uint64_t step, std::uint32_t substep, std::span<double> out) const {
  auto w = words(step, substep);
  for (double& v : out) v = standard_normal(w);
}

double CounterNoise::uniform(std::uint64_t step, std::uint32_t substep) const noexcept {
  auto w = words(step, substep);
  return open_unit(w());
}

}  // namespace lanneal
