#pragma once

#include <vector>

#include "aderlts/common.hpp"

namespace aderlts {

struct QuadraturePoint1D {
  double x;
  double w;
};

/// Gauss-Legendre rule with n points on [0, 1].
std::vector<QuadraturePoint1D> gauss_legendre_01(int n);

struct TetQuadrature {
  std::vector<Vec3> points;  // reference tet (0,0,0),(1,0,0),(0,1,0),(0,0,1)
  std::vector<double> weights;
  int degree = 0;
};

struct TriQuadrature {
  std::vector<std::array<double, 2>> points;  // reference triangle (0,0),(1,0),(0,1)
  std::vector<double> weights;
  int degree = 0;
};

/// Collapsed (Duffy) product rules, exact for polynomials up to `degree`.
TetQuadrature tet_quadrature(int degree);
TriQuadrature tri_quadrature(int degree);

}  // namespace aderlts
