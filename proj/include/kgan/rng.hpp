#pragma once

#include <cstdint>
#include <vector>

namespace kgan {

/// Deterministic 64-bit PRNG used for every random draw in the toolkit
/// (parameter init, phantom geometry, shuffles, flips, noise batches).
///
/// Core generator: xorshift64* (Vigna), state advanced by
///   x ^= x >> 12; x ^= x << 25; x ^= x >> 27; return x * 2685821657736338717.
/// Seeding runs the raw seed through one splitmix64 step so that small or
/// correlated seeds (0, 1, 2, ...) still start from well-mixed states.
/// The sequence is fully specified here and does not depend on the standard
/// library's distribution implementations, so streams are bit-identical
/// across platforms and toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(splitmix64(seed)) {
    if (state_ == 0) state_ = 0x9E3779B97F4A7C15ull;  // xorshift state must be nonzero
  }

  std::uint64_t next_u64() {
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 2685821657736338717ull;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Lemire multiply-shift; slight bias is
  /// irrelevant at desk scale and the mapping stays platform-independent.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  bool coin() { return (next_u64() >> 63) != 0; }

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// One splitmix64 step; also used standalone to derive per-item seeds
  /// from a master seed.
  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Seed for the i-th derived stream of a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return Rng::splitmix64(master ^ (0xD1B54A32D192ED03ull * (index + 1)));
}

}  // namespace kgan
