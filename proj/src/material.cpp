#include "aderlts/material.hpp"

#include <cmath>
#include <string>

#include "aderlts/common.hpp"

namespace aderlts {

Material Material::from_velocities(double rho, double vp, double vs, double qp, double qs) {
  Material m;
  m.rho = rho;
  m.mu = rho * vs * vs;
  m.lam = rho * vp * vp - 2.0 * m.mu;
  m.qp = qp;
  m.qs = qs;
  return m;
}

double Material::vp() const { return std::sqrt((lam + 2.0 * mu) / rho); }
double Material::vs() const { return std::sqrt(mu / rho); }

void Material::validate() const {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidMaterialError("density must be positive, got " + std::to_string(rho));
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw InvalidMaterialError("shear modulus must be non-negative");
  if (!(lam + 2.0 * mu > 0.0) || !std::isfinite(lam)) throw InvalidMaterialError("P-wave modulus must be positive");
  if (!(qp > 0.0) || !(qs > 0.0)) throw InvalidMaterialError("quality factors must be positive");
}

}  // namespace aderlts
