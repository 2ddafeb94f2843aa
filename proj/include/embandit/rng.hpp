#ifndef EMBANDIT_RNG_HPP
#define EMBANDIT_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>

namespace embandit {

// SplitMix64 scramble. Used both as a stream generator and as a stateless
// hash so that counter-indexed draws are pure functions of (seed, counter).
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL + (counter << 1));
  std::uint64_t a = splitmix64(s);
  return splitmix64(s) ^ a;
}

// Uniform in (0,1]; never returns exactly 0 so it is safe under log().
inline double u64_to_unit_open(std::uint64_t v) {
  return (static_cast<double>(v >> 11) + 1.0) * 0x1.0p-53;
}

// Uniform in [0,1).
inline double u64_to_unit(std::uint64_t v) {
  return static_cast<double>(v >> 11) * 0x1.0p-53;
}

// Self-contained sequential RNG. std::normal_distribution is
// implementation-defined; this keeps streams reproducible everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix_seed(seed, 0)) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  double uniform() { return u64_to_unit(next_u64()); }

  // Box-Muller; consumes exactly two words per draw.
  double normal() {
    const double u1 = u64_to_unit_open(next_u64());
    const double u2 = u64_to_unit(next_u64());
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

 private:
  std::uint64_t state_;
};

// Counter-indexed draws: the k-th value depends only on (seed, k).
inline double counter_normal(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t s = mix_seed(seed, counter);
  const double u1 = u64_to_unit_open(splitmix64(s));
  const double u2 = u64_to_unit(splitmix64(s));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline double counter_uniform(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t s = mix_seed(seed, counter);
  return u64_to_unit(splitmix64(s));
}

}  // namespace embandit

#endif  // EMBANDIT_RNG_HPP
