#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>

namespace lanneal {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
/// Stateless: output is a pure function of (counter, key).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) noexcept {
    std::uint32_t c0 = ctr[0], c1 = ctr[1], c2 = ctr[2], c3 = ctr[3];
    std::uint32_t k0 = key[0], k1 = key[1];
    for (int r = 0; r < 10; ++r) {
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c0;
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c2;
      const auto n0 = static_cast<std::uint32_t>(p1 >> 32) ^ c1 ^ k0;
      const auto n2 = static_cast<std::uint32_t>(p0 >> 32) ^ c3 ^ k1;
      c1 = static_cast<std::uint32_t>(p1);
      c3 = static_cast<std::uint32_t>(p0);
      c0 = n0;
      c2 = n2;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    return {c0, c1, c2, c3};
  }
};

/// Stream of 64-bit words from consecutive Philox blocks of one counter address.
/// Satisfies UniformRandomBitGenerator, so it can drive standard distributions.
class PhiloxWords {
 public:
  using result_type = std::uint64_t;

  PhiloxWords(Philox4x32::Counter base, Philox4x32::Key key) noexcept : ctr_(base), key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    if (pos_ == 2) {
      buf_ = Philox4x32::generate(ctr_, key_);
      ctr_[1] += 1u << 24;  // next block
      pos_ = 0;
    }
    const auto hi = buf_[2 * pos_];
    const auto lo = buf_[2 * pos_ + 1];
    ++pos_;
    return (static_cast<std::uint64_t>(hi) << 32) | lo;
  }

 private:
  Philox4x32::Counter ctr_;
  Philox4x32::Key key_;
  Philox4x32::Counter buf_{};
  int pos_ = 2;
};

/// Standard normal (ziggurat) from a word stream.
double standard_normal(PhiloxWords& words);

/// Uniform on (0, 1) with 52-bit resolution from one word. With 53 bits the
/// top value plus the half-step offset rounds to exactly 1.
inline double open_unit(std::uint64_t word) noexcept {
  return (static_cast<double>(word >> 12) + 0.5) * 0x1.0p-52;
}

/// Noise keyed by (master_seed, stream, step, substep).
///
/// Every draw is addressed explicitly, so trials can be simulated in any order
/// or on any thread and still see identical noise. `stream` is the trial index.
class CounterNoise {
 public:
  CounterNoise(std::uint64_t master_seed, std::uint64_t stream) noexcept;

  /// Word stream for one (step, substep) address. Steps use 48 bits, substeps 8.
  [[nodiscard]] PhiloxWords words(std::uint64_t step, std::uint32_t substep) const noexcept;

  /// Fill `out` with independent standard normals drawn in order from words(step, substep).
  void normals(std::uint64_t step, std::uint32_t substep, std::span<double> out) const;

  /// Uniform on (0, 1), 52-bit resolution.
  [[nodiscard]] double uniform(std::uint64_t step, std::uint32_t substep) const noexcept;

  [[nodiscard]] std::uint64_t master_seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t stream() const noexcept { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  Philox4x32::Key key_;
};

}  // namespace lanneal
