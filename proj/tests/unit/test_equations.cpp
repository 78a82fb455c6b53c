#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "aderlts/equations.hpp"

using namespace aderlts;

namespace {

// Stress rows are rescaled by an impedance first; the similarity transform
// keeps the spectrum but avoids the 1e14 spread between entries.
std::vector<double> sorted_real_eigenvalues(const Eigen::MatrixXd& a, double impedance = 1.0) {
  Eigen::VectorXd s = Eigen::VectorXd::Ones(a.rows());
  s.head(6).setConstant(1.0 / impedance);
  const Eigen::MatrixXd b = s.asDiagonal() * a * s.cwiseInverse().asDiagonal();
  Eigen::EigenSolver<Eigen::MatrixXd> es(b);
  std::vector<double> ev;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    EXPECT_NEAR(es.eigenvalues()[i].imag(), 0.0, 1e-6);
    ev.push_back(es.eigenvalues()[i].real());
  }
  std::sort(ev.begin(), ev.end());
  return ev;
}

FaceGeometry face_with_normal(Vec3 n) {
  const double len = std::sqrt(dot(n, n));
  n = (1.0 / len) * n;
  Vec3 a = std::abs(n[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  Vec3 t1 = cross(n, a);
  t1 = (1.0 / std::sqrt(dot(t1, t1))) * t1;
  FaceGeometry f;
  f.area = 1.0;
  f.normal = n;
  f.tangent1 = t1;
  f.tangent2 = cross(n, t1);
  return f;
}

Eigen::Matrix<double, 9, 1> random_state(std::mt19937& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  Eigen::Matrix<double, 9, 1> q;
  for (auto& v : q) v = d(rng);
  return q;
}

}  // namespace

TEST(Jacobians, LayerEigenvalues) {
  const Material mat = Material::from_velocities(2600, 4000, 2000);
  const JacobianSet j = build_jacobians(mat, RelaxationSet{});
  const auto ev = sorted_real_eigenvalues(j.elastic[0], 2600 * 4000);
  const std::vector<double> expected{-4000, -2000, -2000, 0, 0, 0, 2000, 2000, 4000};
  for (int i = 0; i < 9; ++i) EXPECT_NEAR(ev[i], expected[i], 1e-9 * 4000);
}

TEST(Jacobians, AcousticLimit) {
  const Material mat = Material::from_velocities(1000, 1500, 0);
  const JacobianSet j = build_jacobians(mat, RelaxationSet{});
  for (int d = 0; d < 3; ++d)
    for (int r = 3; r < 6; ++r) EXPECT_EQ(j.elastic[d].row(r).cwiseAbs().maxCoeff(), 0.0);
  const auto ev = sorted_real_eigenvalues(j.elastic[1], 1000 * 1500);
  EXPECT_NEAR(ev.front(), -1500, 1e-9);
  EXPECT_NEAR(ev.back(), 1500, 1e-9);
  for (int i = 1; i < 8; ++i) EXPECT_NEAR(ev[i], 0.0, 1e-9);
}

TEST(Jacobians, InvalidMaterial) {
  Material m;
  m.rho = -1.0;
  EXPECT_THROW(build_jacobians(m, RelaxationSet{}), InvalidMaterialError);
  m = Material{};
  m.lam = -3.0;
  m.mu = 1.0;
  EXPECT_THROW(build_jacobians(m, RelaxationSet{}), InvalidMaterialError);
}

TEST(Jacobians, NormalEigenvaluesForAnyDirection) {
  std::mt19937 rng(5);
  std::normal_distribution<double> d(0.0, 1.0);
  const Material mat = Material::from_velocities(2700, 6000, 3464);
  const JacobianSet j = build_jacobians(mat, RelaxationSet{});
  for (int trial = 0; trial < 20; ++trial) {
    Vec3 n{d(rng), d(rng), d(rng)};
    n = (1.0 / std::sqrt(dot(n, n))) * n;
    const auto ev = sorted_real_eigenvalues(normal_jacobian(j, n), 2700 * 6000);
    const std::vector<double> expected{-6000, -3464, -3464, 0, 0, 0, 3464, 3464, 6000};
    for (int i = 0; i < 9; ++i) EXPECT_NEAR(ev[i], expected[i], 1e-9 * 6000);
  }
}

TEST(Jacobians, AnelasticBlockLayout) {
  const Material mat = Material::from_velocities(2600, 4000, 2000, 120, 40);
  const RelaxationSet r = fit_relaxation(120, 40, 1.0, 3);
  const JacobianSet j = build_jacobians(unrelaxed_material(mat, r), r);
  EXPECT_EQ(num_quantities(3), 27);
  for (int d = 0; d < 3; ++d) {
    const Eigen::MatrixXd full = j.full_jacobian(d, r.omega);
    ASSERT_EQ(full.rows(), 27);
    EXPECT_EQ(full.rightCols(18).cwiseAbs().maxCoeff(), 0.0);
    // Anelastic blocks only read velocities.
    EXPECT_EQ(full.block(9, 0, 18, 6).cwiseAbs().maxCoeff(), 0.0);
  }
  const Eigen::MatrixXd e = j.full_coupling();
  EXPECT_EQ(e.leftCols(9).cwiseAbs().maxCoeff(), 0.0);
  for (int l = 0; l < 3; ++l) EXPECT_DOUBLE_EQ(e(9 + 6 * l, 9 + 6 * l), -r.omega[l]);
}

TEST(Jacobians, ZeroWeightsRemoveAnelasticForcing) {
  RelaxationSet r;
  r.omega = relaxation_frequencies(2.0, 3);
  r.yp.assign(3, 0.0);
  r.ys.assign(3, 0.0);
  r.center_frequency = 2.0;
  const JacobianSet j = build_jacobians(Material::from_velocities(2600, 4000, 2000), r);
  for (const auto& e : j.coupling) EXPECT_EQ(e.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Jacobians, ViscoelasticDispersionMatchesTarget) {
  // A plane wave's complex modulus from the assembled operators should give
  // the fitted Q at the centre frequency and the input velocity there.
  const double fc = 1.5;
  const Material mat = Material::from_velocities(2600, 4000, 2000, 80, 35);
  const RelaxationSet r = fit_relaxation(80, 35, fc, 3);
  const Material mu = unrelaxed_material(mat, r);
  const JacobianSet j = build_jacobians(mu, r);
  const double w = 2.0 * std::numbers::pi * fc;
  // Uniaxial strain rate e^{iwt} along x: sigma_xx = M_U (eps - sum Y_l theta_l).
  std::complex<double> modulus = mu.lam + 2.0 * mu.mu;
  for (int l = 0; l < 3; ++l) {
    const std::complex<double> theta = r.omega[l] / (r.omega[l] + std::complex<double>(0.0, w));
    modulus += j.coupling[l](0, 0) * theta;
  }
  EXPECT_NEAR(modulus.real(), mat.lam + 2.0 * mat.mu, 1e-6 * modulus.real());
  EXPECT_NEAR(modulus.real() / modulus.imag(), effective_q(r.omega, r.yp, w), 1e-9 * 80);
}

TEST(Relaxation, BandFitWithinFivePercent) {
  const double fc = 2.0;
  for (double q : {40.0, 120.0, 500.0, 2000.0}) {
    const RelaxationSet r = fit_relaxation(q, q, fc, 3);
    ASSERT_EQ(r.mechanisms(), 3);
    EXPECT_TRUE(std::is_sorted(r.omega.begin(), r.omega.end()));
    double worst = 0.0;
    const double lo = std::log(2.0 * std::numbers::pi * fc / 10.0);
    const double hi = std::log(2.0 * std::numbers::pi * fc * 10.0);
    for (int k = 0; k < 50; ++k) {
      const double w = std::exp(lo + (hi - lo) * k / 49.0);
      worst = std::max(worst, std::abs(effective_q(r.omega, r.yp, w) - q) / q);
    }
    EXPECT_LT(worst, 0.05) << "Q=" << q;
  }
}

TEST(Relaxation, SingleMechanismIsExactAtItsFrequency) {
  const RelaxationSet r = fit_relaxation(50, 25, 3.0, 1);
  EXPECT_NEAR(r.omega[0], 2.0 * std::numbers::pi * 3.0, 1e-12);
  EXPECT_NEAR(effective_q(r.omega, r.yp, r.omega[0]), 50.0, 1e-10);
  EXPECT_NEAR(effective_q(r.omega, r.ys, r.omega[0]), 25.0, 1e-10);
}

TEST(Relaxation, HighQGivesTinyWeights) {
  const RelaxationSet r = fit_relaxation(1e9, 1e9, 1.0, 3);
  for (int l = 0; l < 3; ++l) {
    EXPECT_LT(std::abs(r.yp[l]), 1e-8);
    EXPECT_LT(std::abs(r.ys[l]), 1e-8);
  }
  EXPECT_THROW(fit_relaxation(10, 10, 1.0, 0), ParameterError);
}

TEST(Relaxation, TooManyMechanismsWarns) {
  const RelaxationSet r = fit_relaxation(50, 50, 1.0, 25);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(FaceRotation, ConjugatesNormalJacobian) {
  const Material mat = Material::from_velocities(2700, 6000, 3464);
  const JacobianSet j = build_jacobians(mat, RelaxationSet{});
  const FaceGeometry f = face_with_normal({0.3, -0.5, 0.8});
  const Mat9 t = face_rotation(f);
  const Mat9 lhs = t * j.elastic[0] * t.inverse();
  EXPECT_LT((lhs - normal_jacobian(j, f.normal)).cwiseAbs().maxCoeff(), 1e-9 * 2700 * 6000 * 6000);
}

TEST(FluxSolver, ContinuousStateReproducesNormalFlux) {
  std::mt19937 rng(9);
  const Material mat = Material::from_velocities(2700, 6000, 3464);
  const RelaxationSet r = fit_relaxation(60, 30, 1.0, 2);
  const JacobianSet j = build_jacobians(mat, r);
  const FaceGeometry f = face_with_normal({1.0, 2.0, -0.5});
  const FaceFlux flux = build_face_flux(f, 1.0, mat, mat, BoundaryKind::kInterior, j);
  for (int trial = 0; trial < 5; ++trial) {
    const auto q = random_state(rng);
    const Eigen::Matrix<double, 9, 1> sum = flux.minus_e * q + flux.plus_e * q;
    const Eigen::Matrix<double, 9, 1> direct = normal_jacobian(j, f.normal) * q;
    EXPECT_LT((sum - direct).cwiseAbs().maxCoeff(), 1e-12 * direct.cwiseAbs().maxCoeff());
    const Eigen::Matrix<double, 6, 1> suma = flux.minus_a * q + flux.plus_a * q;
    const Eigen::Matrix<double, 6, 1> directa = normal_anelastic(j, f.normal) * q;
    EXPECT_LT((suma - directa).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + directa.cwiseAbs().maxCoeff()));
  }
}

TEST(FluxSolver, ZeroStateZeroFlux) {
  const Material a = Material::from_velocities(2700, 6000, 3464);
  const Material b = Material::from_velocities(2600, 4000, 2000);
  const JacobianSet j = build_jacobians(a, RelaxationSet{});
  const FaceFlux flux = build_face_flux(face_with_normal({0, 0, 1}), 1.0, a, b, BoundaryKind::kInterior, j);
  const Eigen::Matrix<double, 9, 1> zero = Eigen::Matrix<double, 9, 1>::Zero();
  EXPECT_EQ((flux.minus_e * zero + flux.plus_e * zero).cwiseAbs().maxCoeff(), 0.0);
}

TEST(FluxSolver, InterfaceStateIsUpwind) {
  // 1D oracle: for a face normal to x, the Godunov state follows from the
  // characteristic relations sigma -/+ Z u on each side.
  const Material a = Material::from_velocities(2700, 6000, 3464);
  const Material b = Material::from_velocities(2600, 4000, 2000);
  const JacobianSet j = build_jacobians(a, RelaxationSet{});
  const FaceGeometry f = face_with_normal({1, 0, 0});
  const FaceFlux flux = build_face_flux(f, 1.0, a, b, BoundaryKind::kInterior, j);
  std::mt19937 rng(1);
  const auto ql = random_state(rng);
  const auto qr = random_state(rng);
  const double zl = a.rho * a.vp(), zr = b.rho * b.vp();
  const double u = (zl * ql[6] + zr * qr[6] + qr[0] - ql[0]) / (zl + zr);
  const double s = ql[0] + zl * (u - ql[6]);
  const Eigen::Matrix<double, 9, 1> out = flux.minus_e * ql + flux.plus_e * qr;
  EXPECT_NEAR(out[0], -(a.lam + 2 * a.mu) * u, 1e-9 * std::abs(a.lam * u));
  EXPECT_NEAR(out[6], -s / a.rho, 1e-12);
}

TEST(FluxSolver, FreeSurfaceWithZeroTraction) {
  std::mt19937 rng(4);
  const Material mat = Material::from_velocities(2700, 6000, 3464);
  const JacobianSet j = build_jacobians(mat, RelaxationSet{});
  const FaceGeometry f = face_with_normal({0.2, 0.1, 1.0});
  const FaceFlux flux = build_face_flux(f, 1.0, mat, mat, BoundaryKind::kFreeSurface, j);
  EXPECT_EQ(flux.plus_e.cwiseAbs().maxCoeff(), 0.0);
  // Build a state whose traction on the face vanishes.
  auto q = random_state(rng);
  const Mat9 t = face_rotation(f);
  Eigen::Matrix<double, 9, 1> qf = t.inverse() * q;
  qf[0] = qf[3] = qf[5] = 0.0;
  q = t * qf;
  const Eigen::Matrix<double, 9, 1> out = flux.minus_e * q;
  for (int r = 6; r < 9; ++r) EXPECT_NEAR(out[r], 0.0, 1e-12);
  const Eigen::Matrix<double, 9, 1> direct = normal_jacobian(j, f.normal) * q;
  EXPECT_LT((out - direct).cwiseAbs().maxCoeff(), 1e-12 * direct.cwiseAbs().maxCoeff());
}

TEST(FluxSolver, OutflowHasNoNeighbourPart) {
  const Material mat = Material::from_velocities(2700, 6000, 3464);
  const JacobianSet j = build_jacobians(mat, RelaxationSet{});
  const FaceFlux flux = build_face_flux(face_with_normal({0, 1, 0}), 1.0, mat, mat, BoundaryKind::kOutflow, j);
  EXPECT_EQ(flux.plus_e.cwiseAbs().maxCoeff(), 0.0);
  // An incoming-only wave is not reflected: q = left-going P eigenvector gives zero flux.
  Eigen::Matrix<double, 9, 1> qf = Eigen::Matrix<double, 9, 1>::Zero();
  const double z = mat.rho * mat.vp();
  qf[0] = z;  // sigma = Z u: left-going in face frame
  qf[6] = 1.0;
  qf[1] = qf[2] = mat.lam / (mat.lam + 2 * mat.mu) * z;
  const Eigen::Matrix<double, 9, 1> q = face_rotation(face_with_normal({0, 1, 0})) * qf;
  EXPECT_LT((flux.minus_e * q).cwiseAbs().maxCoeff(), 1e-9);
}
