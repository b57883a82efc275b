#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include "l2e/errors.hpp"

namespace l2e {

// SplitMix64 finalizer. Used to turn (seed, tag...) tuples into well-mixed
// stream seeds so that sub-streams keyed by small integers are independent.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed,
                              std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t t : tags) h = splitmix64(h ^ (t + 0x9e3779b97f4a7c15ULL));
  return h;
}

// Deterministic RNG. All distributions are implemented explicitly (instead
// of std::*_distribution) so that a given seed yields the same draws on any
// standard library. Results therefore only depend on mt19937_64, which is
// specified bit-for-bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on {0, ..., bound-1}, unbiased via rejection.
  std::uint64_t uniform_below(std::uint64_t bound) {
    if (bound == 0) throw InvalidInput("uniform_below: bound must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % bound;
  }

  // Uniform integer on {lo, ..., hi} inclusive.
  int uniform_int(int lo, int hi) {
    if (lo > hi) throw InvalidInput("uniform_int: empty range");
    return lo + static_cast<int>(uniform_below(
                    static_cast<std::uint64_t>(hi) - lo + 1));
  }

  // Standard normal via Box-Muller (cosine branch only, partner discarded,
  // so each call consumes exactly two uniforms).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
  }

  // Exponential with the given rate, by inversion.
  double exponential(double rate) {
    if (!(rate > 0)) throw InvalidInput("exponential: rate must be positive");
    return -std::log1p(-uniform()) / rate;
  }

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices from {0, ..., population-1} by partial Fisher-Yates.
  // Order of the result is the draw order.
  std::vector<int> sample_without_replacement(int population, int k) {
    if (k < 0 || k > population)
      throw InvalidInput("sample_without_replacement: k out of range");
    std::vector<int> pool(population);
    for (int i = 0; i < population; ++i) pool[i] = i;
    for (int i = 0; i < k; ++i) {
      int j = i + static_cast<int>(uniform_below(
                      static_cast<std::uint64_t>(population - i)));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace l2e
