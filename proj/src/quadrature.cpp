#include "adrf/quadrature.hpp"

#include <cmath>
#include <numbers>

namespace adrf {

GaussLegendre
gauss_legendre(int n, double a, double b)
{
  require(n >= 1, "gauss_legendre: n must be positive");
  GaussLegendre rule{ Vector(n), Vector(n) };
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const int m = (n + 1) / 2;
  for (int i = 1; i <= m; ++i) {
    double z = std::cos(std::numbers::pi * (i - 0.25) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0;
      double p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15) {
        break;
      }
    }
    rule.nodes(i - 1) = mid - half * z;
    rule.nodes(n - i) = mid + half * z;
    rule.weights(i - 1) = 2.0 * half / ((1.0 - z * z) * pp * pp);
    rule.weights(n - i) = rule.weights(i - 1);
  }
  return rule;
}

GaussLegendre
gauss_legendre_composite(int n, int panels, double a, double b)
{
  require(panels >= 1, "gauss_legendre_composite: panels must be positive");
  GaussLegendre rule{ Vector(n * panels), Vector(n * panels) };
  const double width = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    auto piece = gauss_legendre(n, a + p * width, a + (p + 1) * width);
    rule.nodes.segment(p * n, n) = piece.nodes;
    rule.weights.segment(p * n, n) = piece.weights;
  }
  return rule;
}

} // namespace adrf
