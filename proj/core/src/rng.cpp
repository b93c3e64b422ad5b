#include "riaft/rng.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "riaft/special.hpp"

namespace riaft {

namespace {
std::uint64_t splitmix64(std::uint64_t& s) {
  s += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace

Rng Rng::derive(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t s = master ^ (0xD1B54A32D192ED03ULL * (stream + 1));
  splitmix64(s);
  return Rng(splitmix64(s));
}

double Rng::normal() { return normal_quantile(uniform()); }

double Rng::exponential(double rate) {
  if (rate <= 0.0) throw std::domain_error("exponential: rate must be positive");
  return -std::log(uniform()) / rate;
}

double Rng::gamma(double shape, double scale) {
  if (shape <= 0.0 || scale <= 0.0) throw std::domain_error("gamma: parameters must be positive");
  if (shape < 1.0) {
    // boost via Gamma(shape + 1) and a uniform power
    const double g = gamma(shape + 1.0, 1.0);
    return scale * g * std::pow(uniform(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return scale * d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return scale * d * v;
  }
}

double Rng::trunc_normal_lower(double mu, double sigma, double lower) {
  if (sigma <= 0.0) throw std::domain_error("trunc_normal_lower: sigma must be positive");
  const double a = (lower - mu) / sigma;
  double z;
  if (a < 0.45) {
    do {
      z = normal();
    } while (z < a);
  } else {
    // Robert (1995): shifted-exponential proposal for far-tail bounds.
    const double alpha = 0.5 * (a + std::sqrt(a * a + 4.0));
    for (;;) {
      z = a + exponential(alpha);
      const double rho = std::exp(-0.5 * (z - alpha) * (z - alpha));
      if (uniform() <= rho) break;
    }
  }
  return mu + sigma * z;
}

std::uint64_t Rng::uniform_below(std::uint64_t n) {
  if (n == 0) throw std::domain_error("uniform_below: n must be positive");
  const std::uint64_t maxv = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t lim = maxv - maxv % n;
  std::uint64_t x;
  do {
    x = gen_();
  } while (x >= lim);
  return x % n;
}

std::vector<int> Rng::permutation(int n) {
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  shuffle(p);
  return p;
}

}  // namespace riaft
