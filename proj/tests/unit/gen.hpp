#pragma once

// Small seeded generators for property tests.

#include <cstdint>
#include <random>
#include <vector>

namespace gen {

class Source {
 public:
  explicit Source(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal(double mean = 0.0, double sd = 1.0) { return std::normal_distribution<double>(mean, sd)(rng_); }
  std::size_t index(std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_); }
  bool coin() { return std::bernoulli_distribution(0.5)(rng_); }

  std::vector<double> signal(std::size_t n, double mean = 0.0, double sd = 1.0) {
    std::vector<double> x(n);
    for (double& v : x) v = normal(mean, sd);
    return x;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// Runs `body` for `cases` independent draws, each with its own seed, so a
// failure message can name the case that broke.
template <typename Body>
void for_cases(std::uint64_t seed, int cases, Body&& body) {
  for (int c = 0; c < cases; ++c) {
    Source src(seed * 1000003ULL + static_cast<std::uint64_t>(c));
    body(src, c);
  }
}

}  // namespace gen
