#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace bidrank {

// All randomness in this project flows through the generator below, seeded through
// derive_seed chains. Results are reproducible bit-for-bit across platforms, which
// the standard <random> distributions do not guarantee.

inline constexpr std::uint64_t kDefaultSeed = 0x5EEDBA5Eu;

// splitmix64 finalizer; a pure function of its argument.
inline std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic stream splitting: derive_seed(base, stream, i, j) names one
// independent stream. Streams used across the project:
//   (seed, kSlotStream, t)              per-slot allocation stream
//   (seed, kReplicationStream, i)       per-replication master for MC estimates
//   (seed, kOutcomeStream, i)           per-record outcome draws
//   (seed, kScenarioStream, id_hash)    per-scenario master in the runner
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                                 std::uint64_t i = 0, std::uint64_t j = 0) noexcept {
  return mix64(mix64(mix64(mix64(base) ^ stream) ^ i) ^ j);
}

inline constexpr std::uint64_t kSlotStream = 0xA110u;
inline constexpr std::uint64_t kReplicationStream = 0x4E65u;
inline constexpr std::uint64_t kOutcomeStream = 0x0DA7u;
inline constexpr std::uint64_t kScenarioStream = 0x5CE0u;
inline constexpr std::uint64_t kStrategyStream = 0xBE57u;

inline std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// xoshiro256++ (Blackman & Vigna), state expanded from the seed with splitmix64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept {
    std::uint64_t s = seed;
    for (auto& w : state_) w = mix64(s++);
  }

  std::uint64_t next() noexcept {
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

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n); multiply-shift (bias < n / 2^64, irrelevant here).
  std::uint64_t below(std::uint64_t n) noexcept {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  // Standard normal via Box-Muller; two uniforms per draw, no cached spare.
  double normal() noexcept {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  template <typename T>
  void shuffle(T* data, std::size_t n) noexcept {
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      T tmp = data[i - 1];
      data[i - 1] = data[j];
      data[j] = tmp;
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
};

// Streaming mean / std error accumulator (Welford).
class RunningStat {
 public:
  void add(double x) noexcept {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }

  long long count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept {
    return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
  }
  double std_error() const noexcept {
    return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }

 private:
  long long n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace bidrank
