#include "aderlts/equations.hpp"

#include <cmath>
#include <map>
#include <numbers>

namespace aderlts {
namespace {

constexpr int kFitSamples = 20;

// Voigt index of the symmetric tensor entry (i, j).
constexpr int voigt(int i, int j) {
  if (i == j) return i;
  if (i > j) std::swap(i, j);
  if (i == 0 && j == 1) return 3;
  if (i == 1 && j == 2) return 4;
  return 5;
}

Mat9 rotation_matrix(const Eigen::Matrix3d& r) {
  Mat9 t = Mat9::Zero();
  for (int col = 0; col < 6; ++col) {
    Eigen::Matrix3d s = Eigen::Matrix3d::Zero();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (voigt(i, j) == col) s(i, j) = 1.0;
    const Eigen::Matrix3d rs = r * s * r.transpose();
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) t(voigt(i, j), col) = rs(i, j);
  }
  t.block<3, 3>(6, 6) = r;
  return t;
}

// Riemann-state weights in the face frame for one acoustic-type pair.
void riemann_pair(Mat9& gl, Mat9& gr, int s, int u, double zl, double zr) {
  const double sum = zl + zr;
  if (sum == 0.0) {
    gl(s, s) = gl(u, u) = gr(s, s) = gr(u, u) = 0.5;
    return;
  }
  gl(u, u) = zl / sum;
  gr(u, u) = zr / sum;
  gl(u, s) = -1.0 / sum;
  gr(u, s) = 1.0 / sum;
  gl(s, s) = zr / sum;
  gr(s, s) = zl / sum;
  gl(s, u) = -zl * zr / sum;
  gr(s, u) = zl * zr / sum;
}

}  // namespace

std::vector<double> relaxation_frequencies(double center_freq, int m) {
  if (m < 0) throw ParameterError("mechanism count must be non-negative");
  if (m > 0 && !(center_freq > 0.0)) throw ParameterError("center frequency must be positive");
  const double wc = 2.0 * std::numbers::pi * center_freq;
  std::vector<double> omega(m);
  if (m == 1) {
    omega[0] = wc;
    return omega;
  }
  for (int l = 0; l < m; ++l) omega[l] = wc * std::pow(10.0, -1.0 + 2.0 * l / (m - 1));
  return omega;
}

std::vector<double> fit_weights(const std::vector<double>& omega, double q, std::vector<std::string>* warnings) {
  const int m = static_cast<int>(omega.size());
  std::vector<double> y(m, 0.0);
  if (m == 0 || std::isinf(q)) return y;
  if (!(q > 0.0)) throw InvalidMaterialError("quality factor must be positive");
  std::vector<double> samples;
  if (m == 1) {
    samples = omega;
  } else {
    const double lo = std::log(omega.front());
    const double hi = std::log(omega.back());
    for (int k = 0; k < kFitSamples; ++k) samples.push_back(std::exp(lo + (hi - lo) * k / (kFitSamples - 1)));
    if (m > kFitSamples && warnings)
      warnings->push_back("relaxation fit has more mechanisms (" + std::to_string(m) + ") than band samples (" +
                          std::to_string(kFitSamples) + "); weights are not uniquely determined");
  }
  Eigen::MatrixXd a(samples.size(), m);
  Eigen::VectorXd rhs = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(samples.size()), 1.0 / q);
  for (std::size_t k = 0; k < samples.size(); ++k)
    for (int l = 0; l < m; ++l) {
      const double w = samples[k];
      const double wl = omega[l];
      a(static_cast<Eigen::Index>(k), l) = (wl * w + wl * wl / q) / (wl * wl + w * w);
    }
  const Eigen::VectorXd sol = a.completeOrthogonalDecomposition().solve(rhs);
  for (int l = 0; l < m; ++l) y[l] = sol[l];
  return y;
}

RelaxationSet fit_relaxation(double qp, double qs, double center_freq, int m) {
  if (m < 1) throw ParameterError("fit_relaxation needs at least one mechanism");
  if (!(qp > 0.0) || !(qs > 0.0)) throw InvalidMaterialError("quality factors must be positive");
  RelaxationSet r;
  r.center_frequency = center_freq;
  r.omega = relaxation_frequencies(center_freq, m);
  r.yp = fit_weights(r.omega, qp, &r.warnings);
  r.ys = fit_weights(r.omega, qs, &r.warnings);
  return r;
}

RelaxationSet refit(const RelaxationSet& base, double qp, double qs) {
  RelaxationSet r;
  r.center_frequency = base.center_frequency;
  r.omega = base.omega;
  r.yp = fit_weights(r.omega, qp, &r.warnings);
  r.ys = fit_weights(r.omega, qs, &r.warnings);
  return r;
}

double effective_q(const std::vector<double>& omega, const std::vector<double>& weights, double w) {
  double re = 1.0;
  double im = 0.0;
  for (std::size_t l = 0; l < omega.size(); ++l) {
    const double wl = omega[l];
    const double d = wl * wl + w * w;
    re -= weights[l] * wl * wl / d;
    im += weights[l] * wl * w / d;
  }
  return re / im;
}

Material unrelaxed_material(const Material& mat, const RelaxationSet& relax) {
  if (relax.mechanisms() == 0) return mat;
  const double wc = 2.0 * std::numbers::pi * relax.center_frequency;
  auto factor = [&](const std::vector<double>& y) {
    double s = 1.0;
    for (int l = 0; l < relax.mechanisms(); ++l) {
      const double wl = relax.omega[l];
      s -= y[l] * wl * wl / (wl * wl + wc * wc);
    }
    if (!(s > 0.0)) throw InvalidMaterialError("relaxation weights too large for the requested Q");
    return s;
  };
  const double m_ref = mat.lam + 2.0 * mat.mu;
  Material u = mat;
  u.mu = mat.mu / factor(relax.ys);
  u.lam = m_ref / factor(relax.yp) - 2.0 * u.mu;
  return u;
}

JacobianSet build_jacobians(const Material& mat, const RelaxationSet& relax) {
  mat.validate();
  const double lam = mat.lam;
  const double mu = mat.mu;
  const double m = lam + 2.0 * mu;
  const double irho = 1.0 / mat.rho;
  JacobianSet j;
  for (auto& a : j.elastic) a.setZero();
  for (auto& a : j.anelastic) a.setZero();
  Mat9& a = j.elastic[0];
  a(0, 6) = -m;
  a(1, 6) = -lam;
  a(2, 6) = -lam;
  a(3, 7) = -mu;
  a(5, 8) = -mu;
  a(6, 0) = -irho;
  a(7, 3) = -irho;
  a(8, 5) = -irho;
  Mat9& b = j.elastic[1];
  b(0, 7) = -lam;
  b(1, 7) = -m;
  b(2, 7) = -lam;
  b(3, 6) = -mu;
  b(4, 8) = -mu;
  b(6, 3) = -irho;
  b(7, 1) = -irho;
  b(8, 4) = -irho;
  Mat9& c = j.elastic[2];
  c(0, 8) = -lam;
  c(1, 8) = -lam;
  c(2, 8) = -m;
  c(4, 7) = -mu;
  c(5, 6) = -mu;
  c(6, 5) = -irho;
  c(7, 4) = -irho;
  c(8, 2) = -irho;

  const int nm = relax.mechanisms();
  if (nm == 0) return j;
  // Strain rates (engineering shear) from velocity gradients.
  j.anelastic[0](0, 6) = -1.0;
  j.anelastic[0](3, 7) = -1.0;
  j.anelastic[0](5, 8) = -1.0;
  j.anelastic[1](1, 7) = -1.0;
  j.anelastic[1](3, 6) = -1.0;
  j.anelastic[1](4, 8) = -1.0;
  j.anelastic[2](2, 8) = -1.0;
  j.anelastic[2](4, 7) = -1.0;
  j.anelastic[2](5, 6) = -1.0;
  for (int l = 0; l < nm; ++l) {
    const double yp = relax.yp.empty() ? 0.0 : relax.yp[l];
    const double ys = relax.ys.empty() ? 0.0 : relax.ys[l];
    Mat96 e = Mat96::Zero();
    for (int r = 0; r < 3; ++r)
      for (int col = 0; col < 3; ++col) e(r, col) = r == col ? -m * yp : -(m * yp - 2.0 * mu * ys);
    for (int r = 3; r < 6; ++r) e(r, r) = -mu * ys;
    j.coupling.push_back(e);
    j.decay.push_back(-relax.omega[l]);
  }
  return j;
}

Eigen::MatrixXd JacobianSet::full_jacobian(int d, const std::vector<double>& omega) const {
  const int nq = num_quantities(mechanisms());
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(nq, nq);
  full.topLeftCorner<9, 9>() = elastic[d];
  for (int l = 0; l < mechanisms(); ++l) full.block<6, 9>(9 + 6 * l, 0) = omega[l] * anelastic[d];
  return full;
}

Eigen::MatrixXd JacobianSet::full_coupling() const {
  const int nq = num_quantities(mechanisms());
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(nq, nq);
  for (int l = 0; l < mechanisms(); ++l) {
    full.block<9, 6>(0, 9 + 6 * l) = coupling[l];
    for (int r = 0; r < 6; ++r) full(9 + 6 * l + r, 9 + 6 * l + r) = decay[l];
  }
  return full;
}

Mat9 normal_jacobian(const JacobianSet& jac, const Vec3& n) {
  return n[0] * jac.elastic[0] + n[1] * jac.elastic[1] + n[2] * jac.elastic[2];
}

Mat69 normal_anelastic(const JacobianSet& jac, const Vec3& n) {
  return n[0] * jac.anelastic[0] + n[1] * jac.anelastic[1] + n[2] * jac.anelastic[2];
}

Mat9 face_rotation(const FaceGeometry& face) {
  Eigen::Matrix3d r;
  for (int i = 0; i < 3; ++i) {
    r(i, 0) = face.normal[i];
    r(i, 1) = face.tangent1[i];
    r(i, 2) = face.tangent2[i];
  }
  return rotation_matrix(r);
}

FaceFlux build_face_flux(const FaceGeometry& face, double scale, const Material& inside, const Material& outside,
                         BoundaryKind kind, const JacobianSet& jac_inside) {
  Eigen::Matrix3d r;
  for (int i = 0; i < 3; ++i) {
    r(i, 0) = face.normal[i];
    r(i, 1) = face.tangent1[i];
    r(i, 2) = face.tangent2[i];
  }
  const Mat9 t = rotation_matrix(r);
  const Mat9 tinv = rotation_matrix(r.transpose());

  const double zpl = inside.rho * inside.vp();
  const double zsl = inside.rho * inside.vs();
  double zpr = zpl;
  double zsr = zsl;
  if (kind == BoundaryKind::kInterior) {
    zpr = outside.rho * outside.vp();
    zsr = outside.rho * outside.vs();
  }
  Mat9 gl = Mat9::Zero();
  Mat9 gr = Mat9::Zero();
  gl(1, 1) = gl(2, 2) = gl(4, 4) = 1.0;
  riemann_pair(gl, gr, 0, 6, zpl, zpr);
  riemann_pair(gl, gr, 3, 7, zsl, zsr);
  riemann_pair(gl, gr, 5, 8, zsl, zsr);

  FaceFlux f;
  f.plus_e.setZero();
  f.plus_a.setZero();
  if (kind == BoundaryKind::kFreeSurface) {
    Mat9 mirror = Mat9::Identity();
    mirror(0, 0) = mirror(3, 3) = mirror(5, 5) = -1.0;
    gl += gr * mirror;
    gr.setZero();
  } else if (kind == BoundaryKind::kOutflow) {
    gr.setZero();
  }
  // Normal Jacobian in the face frame: A_n = T A_x T^-1.
  const Mat9 ax = jac_inside.elastic[0];
  const Mat69 an = normal_anelastic(jac_inside, face.normal);
  f.minus_e = scale * t * ax * gl * tinv;
  f.minus_a = scale * an * t * gl * tinv;
  if (kind == BoundaryKind::kInterior) {
    f.plus_e = scale * t * ax * gr * tinv;
    f.plus_a = scale * an * t * gr * tinv;
  }
  return f;
}

std::vector<ElementOperators> build_element_operators(const std::vector<ElementGeometry>& geometry,
                                                      const FaceAdjacency& adjacency,
                                                      const std::vector<Material>& mats, const RelaxationSet& relax) {
  const std::size_t k_count = geometry.size();
  if (mats.size() != k_count || adjacency.size() != k_count)
    throw ParameterError("geometry, adjacency and materials differ in element count");
  std::vector<Material> unrelaxed(k_count);
  std::vector<JacobianSet> jacs(k_count);
  std::map<std::pair<double, double>, RelaxationSet> fits;
  for (std::size_t k = 0; k < k_count; ++k) {
    RelaxationSet rk;
    if (relax.mechanisms() > 0) {
      auto key = std::make_pair(mats[k].qp, mats[k].qs);
      auto it = fits.find(key);
      if (it == fits.end()) it = fits.emplace(key, refit(relax, key.first, key.second)).first;
      rk = it->second;
    }
    unrelaxed[k] = unrelaxed_material(mats[k], rk);
    jacs[k] = build_jacobians(unrelaxed[k], rk);
  }

  std::vector<ElementOperators> ops(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    const ElementGeometry& g = geometry[k];
    if (!(g.volume > 0.0)) throw GeometryError("element " + std::to_string(k) + " has zero volume");
    ElementOperators& op = ops[k];
    for (int c = 0; c < 3; ++c) {
      op.star_e[c].setZero();
      op.star_a[c].setZero();
      for (int d = 0; d < 3; ++d) {
        op.star_e[c] += g.inverse_jacobian(c, d) * jacs[k].elastic[d];
        op.star_a[c] += g.inverse_jacobian(c, d) * jacs[k].anelastic[d];
      }
    }
    op.coupling = jacs[k].coupling;
    for (int i = 0; i < 4; ++i) {
      const FaceLink& link = adjacency[k][i];
      const Material& outside = link.interior() ? unrelaxed[link.neighbor] : unrelaxed[k];
      const double scale = -g.faces[i].area / (3.0 * g.volume);
      const FaceFlux f = build_face_flux(g.faces[i], scale, unrelaxed[k], outside, link.boundary, jacs[k]);
      op.flux_minus_e[i] = f.minus_e;
      op.flux_plus_e[i] = f.plus_e;
      op.flux_minus_a[i] = f.minus_a;
      op.flux_plus_a[i] = f.plus_a;
    }
  }
  return ops;
}

}  // namespace aderlts
