#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace chui {

/// Stateless counter-based generator. Draw i of stream s under seed k is a
/// pure function of (k, s, i), so results never depend on how work is split
/// across threads.
class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : key_(mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL))) {}

  constexpr std::uint64_t bits(std::uint64_t index) const noexcept {
    return mix(key_ + (index + 1) * 0x9e3779b97f4a7c15ULL);
  }

  /// Uniform in [0, 1) with 53 random bits.
  constexpr double uniform(std::uint64_t index) const noexcept {
    return static_cast<double>(bits(index) >> 11) * 0x1.0p-53;
  }

  /// Standard normal from two consecutive counters (Box-Muller).
  double normal(std::uint64_t index) const noexcept {
    const double u1 = 1.0 - uniform(2 * index);
    const double u2 = uniform(2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  constexpr CounterRng split(std::uint64_t stream) const noexcept {
    CounterRng child(0, 0);
    child.key_ = mix(key_ ^ mix(stream + 0xd1b54a32d192ed03ULL));
    return child;
  }

 private:
  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
};

/// Sequential adaptor over CounterRng for code that wants a stream of draws.
class RngStream {
 public:
  explicit RngStream(CounterRng rng) noexcept : rng_(rng) {}
  RngStream(std::uint64_t seed, std::uint64_t stream) noexcept : rng_(seed, stream) {}

  double uniform() noexcept { return rng_.uniform(next_++); }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  double normal() noexcept {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  std::uint64_t index() const noexcept { return next_; }

 private:
  CounterRng rng_;
  std::uint64_t next_ = 0;
};

}  // namespace chui
