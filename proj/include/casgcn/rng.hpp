// Seedable random source with fully specified transforms.
//
// Every stochastic component of the toolkit (cascade generation, parameter
// initialization, dataset shuffling) draws through this engine so that runs
// are reproducible bit-for-bit from a seed, independent of the standard
// library's unspecified distribution algorithms. The generator is
// std::mt19937_64 (bit-exact per the C++ standard); all transforms below are
// fixed here:
//
//   uniform01   (x >> 11) * 2^-53, then shifted into the open interval (0,1)
//   exponential inverse CDF, -log(1 - u) / rate
//   pareto      inverse CDF, (1 - u)^(-1/shape), scale 1
//   poisson     Knuth product-of-uniforms
//   shuffle     Fisher-Yates, index j = floor(u * (i + 1))
//
// Per-item sub-seeds derive via splitmix64.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace casgcn::rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic sub-seed for item `index` of a run seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ index);
}

class Engine {
 public:
  explicit Engine(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on the open interval (0,1); never returns an exact endpoint, so
  // inverse-CDF draws stay finite and strictly positive.
  double uniform01() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double exponential(double rate) { return -std::log1p(-uniform01()) / rate; }

  // Pareto with minimum 1 and the given tail exponent.
  double pareto(double shape) {
    return std::pow(1.0 - uniform01(), -1.0 / shape);
  }

  std::int64_t poisson(double lambda) {
    if (lambda <= 0.0) return 0;
    const double limit = std::exp(-lambda);
    std::int64_t k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform01();
    } while (p > limit);
    return k - 1;
  }

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      auto j = static_cast<std::size_t>(uniform01() * static_cast<double>(i));
      if (j >= i) j = i - 1;
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace casgcn::rng
