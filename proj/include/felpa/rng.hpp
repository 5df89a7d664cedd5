#pragma once

#include <complex>
#include <cstdint>
#include <cmath>
#include <string_view>

namespace felpa {

// SplitMix64 step function. Used for seed expansion and stream derivation.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256++ seeded through SplitMix64. Independent streams are derived by
// hashing a textual label into the parent seed, so any consumer (channel
// draws, task generators, restart schedules) replays bit-identically from the
// root seed alone. Gaussian variates use an explicit Box-Muller transform;
// std::normal_distribution is implementation-defined and would break
// cross-toolchain reproducibility of traces.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64_next(sm);
  }

  // Derives an independent child stream. Children with distinct labels (or
  // distinct parent seeds) are statistically independent for our purposes.
  Rng derive(std::string_view label) const {
    std::uint64_t h = seed_ ^ 0x51'7c'c1'b7'27'22'0a'95ULL;
    for (char c : label) {
      h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
      h *= 0x100000001b3ULL;
    }
    std::uint64_t sm = h;
    return Rng(splitmix64_next(sm));
  }

  Rng derive(std::string_view label, std::uint64_t index) const {
    Rng child = derive(label);
    std::uint64_t sm = child.seed_ + 0x9e3779b97f4a7c15ULL * (index + 1);
    return Rng(splitmix64_next(sm));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; the spare variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();  // log(0) guard
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Circularly-symmetric complex Gaussian with total variance `variance`
  // (real and imaginary parts each N(0, variance/2)).
  std::complex<double> cnormal(double variance) {
    const double s = std::sqrt(variance / 2.0);
    return {s * normal(), s * normal()};
  }

  std::uint64_t seed() const { return seed_; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
  std::uint64_t seed_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace felpa
