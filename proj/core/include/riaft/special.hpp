#pragma once

// Scalar special functions used by the samplers, the censored log-normal
// likelihood and the distribution checks: normal pdf/cdf/quantile, the
// regularized incomplete gamma function and chi-square tail utilities.

namespace riaft {

double normal_pdf(double x);
double normal_cdf(double x);
// Upper tail P(Z > x), accurate far into the right tail.
double normal_sf(double x);
// Inverse of normal_cdf (Wichura's AS241 rational approximation).
double normal_quantile(double p);
// Mills-ratio hazard phi(x) / P(Z > x); stable for large x.
double normal_hazard(double x);

// Regularized incomplete gamma: P(a,x) lower, Q(a,x) = 1 - P(a,x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

double chi2_cdf(double x, double df);
double chi2_sf(double x, double df);
double chi2_quantile(double p, double df);

}  // namespace riaft
