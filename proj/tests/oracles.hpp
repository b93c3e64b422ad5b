#pragma once

// Test-only oracles: brute-force integration, distribution distance
// statistics and goodness-of-fit machinery. Nothing here touches the
// implementation paths it is used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "riaft/special.hpp"

namespace oracle {

// Normalized posterior moments of an unnormalized density on a uniform grid.
struct GridPosterior {
  double mean = 0.0;
  double var = 0.0;
};

inline GridPosterior grid_posterior(const std::function<double(double)>& log_density, double lo, double hi,
                                    int points = 20001) {
  std::vector<double> logf(static_cast<std::size_t>(points));
  double max_log = -1e300;
  for (int i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
    logf[static_cast<std::size_t>(i)] = log_density(x);
    max_log = std::max(max_log, logf[static_cast<std::size_t>(i)]);
  }
  double z = 0.0, m1 = 0.0, m2 = 0.0;
  for (int i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
    const double w = std::exp(logf[static_cast<std::size_t>(i)] - max_log);
    z += w;
    m1 += w * x;
    m2 += w * x * x;
  }
  GridPosterior g;
  g.mean = m1 / z;
  g.var = m2 / z - g.mean * g.mean;
  return g;
}

// Kolmogorov-Smirnov distance between a sample and a CDF.
inline double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
    d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

// Chi-square goodness of fit: transform draws through the target CDF and bin
// uniformly. Returns the p-value.
inline double gof_pvalue(const std::vector<double>& sample, const std::function<double(double)>& cdf,
                         int bins = 50) {
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  for (double x : sample) {
    double u = cdf(x);
    u = std::min(std::max(u, 0.0), 1.0 - 1e-12);
    counts[static_cast<std::size_t>(u * bins)] += 1.0;
  }
  const double expected = static_cast<double>(sample.size()) / bins;
  double stat = 0.0;
  for (double c : counts) stat += (c - expected) * (c - expected) / expected;
  return riaft::chi2_sf(stat, bins - 1);
}

// CDF of InvGamma(shape, scale): P(X <= x) = Q(shape, scale / x).
inline double inv_gamma_cdf(double shape, double scale, double x) {
  if (x <= 0.0) return 0.0;
  return riaft::gamma_q(shape, scale / x);
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double var_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

inline double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean_of(a), mb = mean_of(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace oracle
