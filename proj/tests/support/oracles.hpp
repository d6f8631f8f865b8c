#pragma once

// Independent reference computations used by the tests.

#include <cmath>
#include <functional>
#include <numbers>

namespace oracle {

// Adaptive Simpson quadrature on [a, b].
inline double
simpson_step(const std::function<double(double)>& f,
             double a,
             double b,
             double fa,
             double fm,
             double fb,
             double whole,
             double tol,
             int depth)
{
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double
adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-13, int depth = 50)
{
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, b, fa, fm, fb, whole, tol, depth);
}

// (1/pi) int_0^1 cos(wv) (1-w^2)^3 m(w) dw, split in panels for the oscillation.
inline double
cosine_transform(double v, const std::function<double(double)>& multiplier, int panels = 16)
{
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double a = static_cast<double>(p) / panels;
    const double b = static_cast<double>(p + 1) / panels;
    sum += adaptive_simpson(
      [&](double w) {
        const double q = 1.0 - w * w;
        return std::cos(w * v) * q * q * q * multiplier(w);
      },
      a,
      b,
      1e-15);
  }
  return sum / std::numbers::pi;
}

inline double
normal_pdf(double z)
{
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

inline double
normal_cdf(double z)
{
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

} // namespace oracle
