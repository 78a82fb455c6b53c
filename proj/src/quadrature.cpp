#include "aderlts/quadrature.hpp"

#include <cmath>
#include <numbers>

namespace aderlts {

std::vector<QuadraturePoint1D> gauss_legendre_01(int n) {
  if (n < 1) throw ParameterError("gauss_legendre_01: n must be >= 1");
  std::vector<QuadraturePoint1D> rule(n);
  for (int i = 0; i < n; ++i) {
    // Newton iteration on P_n starting from the Chebyshev-like guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule[i] = {0.5 * (1.0 - x), 0.5 * w};
  }
  return rule;
}

TetQuadrature tet_quadrature(int degree) {
  if (degree < 0) throw ParameterError("tet_quadrature: negative degree");
  // Integrand degree grows by up to 2 in the collapsed direction.
  const int n = (degree + 3) / 2 + 1;
  const auto g = gauss_legendre_01(n);
  TetQuadrature q;
  q.degree = degree;
  for (const auto& a : g)
    for (const auto& b : g)
      for (const auto& c : g) {
        const double zeta = c.x;
        const double eta = b.x * (1.0 - c.x);
        const double xi = a.x * (1.0 - b.x) * (1.0 - c.x);
        q.points.push_back({xi, eta, zeta});
        q.weights.push_back(a.w * b.w * c.w * (1.0 - b.x) * (1.0 - c.x) * (1.0 - c.x));
      }
  return q;
}

TriQuadrature tri_quadrature(int degree) {
  if (degree < 0) throw ParameterError("tri_quadrature: negative degree");
  const int n = (degree + 2) / 2 + 1;
  const auto g = gauss_legendre_01(n);
  TriQuadrature q;
  q.degree = degree;
  for (const auto& a : g)
    for (const auto& b : g) {
      q.points.push_back({a.x * (1.0 - b.x), b.x});
      q.weights.push_back(a.w * b.w * (1.0 - b.x));
    }
  return q;
}

}  // namespace aderlts
