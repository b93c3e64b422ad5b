#pragma once

#include <cmath>
#include <stdexcept>

namespace riaft {

namespace detail {
template <typename F>
double simpson_rec(const F& f, double a, double b, double fa, double fb, double fm, double whole, double tol,
                   int depth) {
  const double m = 0.5 * (a + b);
  const double flm = f(0.5 * (a + m));
  const double frm = f(0.5 * (m + b));
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double err = left + right - whole;
  if (std::fabs(err) <= 15.0 * tol) return left + right + err / 15.0;
  if (depth >= 48) throw std::runtime_error("adaptive_simpson: tolerance not reached");
  return simpson_rec(f, a, m, fa, fm, flm, left, 0.5 * tol, depth + 1) +
         simpson_rec(f, m, b, fm, fb, frm, right, 0.5 * tol, depth + 1);
}
}  // namespace detail

// Adaptive Simpson quadrature with absolute tolerance.
template <typename F>
double adaptive_simpson(const F& f, double a, double b, double abs_tol) {
  if (!(b > a)) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_rec(f, a, b, fa, fb, fm, whole, abs_tol, 0);
}

}  // namespace riaft
