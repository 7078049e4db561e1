#pragma once

#include <cmath>
#include <cstdint>

namespace zokit {

/// Deterministic counter-based random stream.
///
/// The generator is SplitMix64 (Steele, Lea & Flood 2014): the state advances
/// by the 64-bit golden-ratio constant and each output is the finalizer hash
/// of the state. The raw 64-bit stream depends only on the seed and the call
/// sequence, so equal seeds reproduce equal streams. Floating-point outputs
/// additionally depend on libm for log/cos, which is deterministic per
/// platform.
///
/// Independent sub-streams are derived by hashing (seed, role, a, b); workers
/// and per-iteration draws each own a sub-stream instead of sharing state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : root_(seed), state_(seed) {}

  std::uint64_t next_u64() {
    state_ += kGamma;
    return mix(state_);
  }

  /// Uniform double in [0, 1), 53 random mantissa bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard Gaussian via Box-Muller; generates pairs and caches the spare.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * kPi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Unbiased uniform integer in [0, n), n >= 1, by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  /// Sub-stream keyed by (role, a, b). The derivation hashes the seed this
  /// instance was constructed with, not its consumed position, so sub-streams
  /// are stable regardless of interleaved draws on the parent.
  Rng substream(std::uint64_t role, std::uint64_t a = 0, std::uint64_t b = 0) const {
    std::uint64_t s = root_;
    s = mix(s + kGamma * (role + 1));
    s = mix(s + kGamma * (a + 1));
    s = mix(s + kGamma * (b + 1));
    return Rng(s);
  }

  std::uint64_t seed() const { return root_; }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  static constexpr double kPi = 3.14159265358979323846;

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t root_;
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace zokit
