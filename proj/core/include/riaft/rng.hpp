#pragma once

#include <cstdint>
#include <vector>

#include <random>

namespace riaft {

// Seeded random generator with self-contained distribution code so that a
// given seed reproduces the same stream on any platform. Every stochastic
// component takes one of these by reference; nothing draws from a global.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Independent child stream (master seed + task index), for parallel work.
  static Rng derive(std::uint64_t master, std::uint64_t stream);

  std::uint64_t next_u64() { return gen_(); }

  // Strictly inside (0,1).
  double uniform() { return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal();
  double normal(double mu, double sd) { return mu + sd * normal(); }

  double exponential(double rate = 1.0);

  // Marsaglia-Tsang; scale parameterization (mean = shape * scale).
  double gamma(double shape, double scale = 1.0);

  // X ~ InvGamma(shape, scale): density ∝ x^{-shape-1} exp(-scale/x).
  double inv_gamma(double shape, double scale) { return scale / gamma(shape, 1.0); }

  double chi_square(double df) { return gamma(0.5 * df, 2.0); }

  // Draw from N(mu, sigma^2) conditioned on exceeding `lower`; robust for
  // bounds many sigmas above the mean (exponential-tilted rejection).
  double trunc_normal_lower(double mu, double sigma, double lower);

  int bernoulli(double p) { return uniform() < p ? 1 : 0; }

  // Uniform integer in [0, n), modulo-rejection to avoid bias.
  std::uint64_t uniform_below(std::uint64_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::vector<int> permutation(int n);

 private:
  std::mt19937_64 gen_;
};

}  // namespace riaft
