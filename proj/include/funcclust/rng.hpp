#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace funcclust {

/// SplitMix64 step (Vigna). Advances `state` and returns the mixed output.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Key of the `index`-th child stream of the stream identified by `key`.
inline std::uint64_t derive_stream(std::uint64_t key, std::uint64_t index) {
  std::uint64_t s = key + 0x9E3779B97F4A7C15ULL * (index + 1);
  return splitmix64(s);
}

/// Seedable stream-splittable random generator.
///
/// The uniform source is std::mt19937_64 (bit-stable across platforms by the
/// C++ standard), seeded through SplitMix64. Child streams are derived from
/// the parent's key alone, never from its draw state, so `child(i)` yields the
/// same stream regardless of how much the parent has been consumed. Normal
/// deviates use the Box-Muller transform and consume exactly two uniform
/// draws per call.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : key_(key) {
    std::uint64_t s = key;
    engine_.seed(splitmix64(s));
  }

  std::uint64_t key() const { return key_; }

  /// Independent child stream `index`; deterministic in (key, index).
  Rng child(std::uint64_t index) const { return Rng(derive_stream(key_, index)); }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1); safe as a logarithm argument.
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal deviate (Box-Muller, two uniforms per call).
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  /// Uniform index in [0, n). n must be positive.
  std::size_t index_below(std::size_t n) {
    std::size_t i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

 private:
  std::uint64_t key_;
  std::mt19937_64 engine_;
};

}  // namespace funcclust
