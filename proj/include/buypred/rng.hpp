#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace buypred {

// Mixes a seed and a stream tag into an independent-looking child seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic RNG used everywhere randomness is needed. std::mt19937_64 has
// standard-specified raw output, and the bounded/real draws below are our own,
// so identical seeds reproduce identical results on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Unbiased integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~0ULL - ~0ULL % n;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double range(double lo, double hi) { return lo + (hi - lo) * unit(); }

  bool bernoulli(double p) { return unit() < p; }

  // Knuth's method; fine for the small means used here.
  std::uint64_t poisson(double mean) {
    const double limit = std::exp(-mean);
    double product = 1.0;
    std::uint64_t count = 0;
    do {
      product *= unit();
      ++count;
    } while (product > limit);
    return count - 1;
  }

  // Child generator for a tagged parallel stream (per-tree seeds etc.).
  Rng fork(std::uint64_t stream) const {
    return Rng(splitmix64(seed_ ^ splitmix64(stream)));
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

template <typename T>
void shuffle(std::vector<T>& values, Rng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(values[i - 1], values[j]);
  }
}

}  // namespace buypred
