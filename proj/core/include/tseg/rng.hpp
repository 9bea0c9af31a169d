#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace tseg {

constexpr std::uint64_t kSplitMixGamma = 0x9E3779B97F4A7C15ull;

/// SplitMix64 finalizer; also the building block for stateless hash noise.
constexpr std::uint64_t mix_bits(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

constexpr std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) {
  return mix_bits(seed + kSplitMixGamma + value * 0xD1B54A32D192ED03ull);
}

template <typename... Rest>
constexpr std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value, Rest... rest) {
  return hash_combine(hash_combine(seed, value), rest...);
}

/// Uniform double in [0, 1) from a hash word.
constexpr double hash_unit(std::uint64_t h) { return double(h >> 11) * 0x1.0p-53; }

/// Splitmix-style PRNG: 64-bit state advanced by a per-stream odd gamma.
/// Streams with the same seed but different stream ids are independent.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : state_(mix_bits(seed + kSplitMixGamma)),
        gamma_(mix_bits(stream + 0x6A09E667F3BCC909ull) | 1ull) {}

  std::uint64_t next() {
    state_ += gamma_;
    return mix_bits(state_);
  }

  double next_double() { return hash_unit(next()); }                    // [0,1)
  float next_float() { return float(next() >> 40) * 0x1.0p-24f; }       // [0,1)

  float uniform(float lo, float hi) { return lo + (hi - lo) * next_float(); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  /// Inclusive range; fixed-point multiply keeps the draw deterministic.
  int uniform_int(int lo, int hi) {
    const std::uint64_t span = std::uint64_t(hi - lo) + 1;
    return lo + int((static_cast<unsigned __int128>(next()) * span) >> 64);
  }

  bool bernoulli(double p) { return next_double() < p; }

  /// Box-Muller; always consumes exactly two draws.
  double normal() {
    const double u1 = double((next() >> 11) + 1) * 0x1.0p-53;  // (0,1]
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  std::array<std::uint64_t, 2> state() const { return {state_, gamma_}; }

  static Rng from_state(const std::array<std::uint64_t, 2>& words) {
    Rng r(0);
    r.state_ = words[0];
    r.gamma_ = words[1] | 1ull;
    return r;
  }

 private:
  std::uint64_t state_;
  std::uint64_t gamma_;
};

}  // namespace tseg
