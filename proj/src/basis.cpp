#include "aderlts/basis.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "aderlts/quadrature.hpp"

namespace aderlts {
namespace {

// Forward-mode dual number carrying the gradient w.r.t. the reference coords.
struct Dual {
  double v = 0.0;
  std::array<double, 3> d{0.0, 0.0, 0.0};
  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT(google-explicit-constructor)
};

Dual operator+(const Dual& a, const Dual& b) {
  Dual r(a.v + b.v);
  for (int i = 0; i < 3; ++i) r.d[i] = a.d[i] + b.d[i];
  return r;
}
Dual operator-(const Dual& a, const Dual& b) {
  Dual r(a.v - b.v);
  for (int i = 0; i < 3; ++i) r.d[i] = a.d[i] - b.d[i];
  return r;
}
Dual operator-(const Dual& a) { return Dual(0.0) - a; }
Dual operator*(const Dual& a, const Dual& b) {
  Dual r(a.v * b.v);
  for (int i = 0; i < 3; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
  return r;
}
Dual operator/(const Dual& a, const Dual& b) {
  Dual r(a.v / b.v);
  for (int i = 0; i < 3; ++i) r.d[i] = (a.d[i] * b.v - a.v * b.d[i]) / (b.v * b.v);
  return r;
}

double value_of(double x) { return x; }
double value_of(const Dual& x) { return x.v; }

template <class T>
T ipow(const T& x, int n) {
  T r(1.0);
  for (int i = 0; i < n; ++i) r = r * x;
  return r;
}

// Orthonormal Jacobi polynomial P_n^{(alpha,0)} on [-1, 1].
template <class T>
T jacobi(const T& x, double alpha, int n) {
  const double beta = 0.0;
  const double gamma0 = std::pow(2.0, alpha + beta + 1.0) / (alpha + beta + 1.0) * std::tgamma(alpha + 1.0) *
                        std::tgamma(beta + 1.0) / std::tgamma(alpha + beta + 1.0);
  T p0(1.0 / std::sqrt(gamma0));
  if (n == 0) return p0;
  const double gamma1 = (alpha + 1.0) * (beta + 1.0) / (alpha + beta + 3.0) * gamma0;
  T p1 = (T((alpha + beta + 2.0) / 2.0) * x + T((alpha - beta) / 2.0)) / T(std::sqrt(gamma1));
  if (n == 1) return p1;
  double aold = 2.0 / (2.0 + alpha + beta) * std::sqrt((alpha + 1.0) * (beta + 1.0) / (alpha + beta + 3.0));
  for (int i = 1; i < n; ++i) {
    const double h1 = 2.0 * i + alpha + beta;
    const double anew = 2.0 / (h1 + 2.0) *
                        std::sqrt((i + 1.0) * (i + 1.0 + alpha + beta) * (i + 1.0 + alpha) * (i + 1.0 + beta) /
                                  (h1 + 1.0) / (h1 + 3.0));
    const double bnew = -(alpha * alpha - beta * beta) / h1 / (h1 + 2.0);
    T p2 = (T(-aold) * p0 + (x - T(bnew)) * p1) / T(anew);
    p0 = p1;
    p1 = p2;
    aold = anew;
  }
  return p1;
}

// Dubiner mode (i,j,k) on the [0,1] reference tet, orthonormal there.
template <class T>
T dubiner3d(const T& xi, const T& eta, const T& zeta, int i, int j, int k) {
  const T r = T(2.0) * xi - T(1.0);
  const T s = T(2.0) * eta - T(1.0);
  const T t = T(2.0) * zeta - T(1.0);
  T a(-1.0), b(-1.0);
  if (std::abs(value_of(s) + value_of(t)) > 1e-14) a = T(2.0) * (T(1.0) + r) / (-s - t) - T(1.0);
  if (std::abs(value_of(t) - 1.0) > 1e-14) b = T(2.0) * (T(1.0) + s) / (T(1.0) - t) - T(1.0);
  const T& c = t;
  const T h1 = jacobi(a, 0.0, i);
  const T h2 = jacobi(b, 2.0 * i + 1.0, j);
  const T h3 = jacobi(c, 2.0 * (i + j) + 2.0, k);
  // 2*sqrt(2) normalizes on the bi-unit tet, sqrt(8) rescales to volume 1/6.
  return T(2.0 * std::sqrt(2.0) * std::sqrt(8.0)) * h1 * h2 * ipow(T(1.0) - b, i) * h3 * ipow(T(1.0) - c, i + j);
}

double dubiner2d(double x, double y, int i, int j) {
  const double r = 2.0 * x - 1.0;
  const double s = 2.0 * y - 1.0;
  double a = -1.0;
  if (std::abs(1.0 - s) > 1e-14) a = 2.0 * (1.0 + r) / (1.0 - s) - 1.0;
  const double b = s;
  return std::sqrt(2.0) * 2.0 * jacobi(a, 0.0, i) * jacobi(b, 2.0 * i + 1.0, j) * std::pow(1.0 - b, i);
}

}  // namespace

BasisInfo basis_counts(int order) {
  if (order < 1 || order > 8) throw ParameterError("basis order must be in [1, 8]");
  return {order, order * (order + 1) * (order + 2) / 6, order * (order + 1) / 2};
}

TetBasis::TetBasis(int order) : order_(order) {
  basis_counts(order);
  for (int d = 0; d < order; ++d)
    for (int i = 0; i <= d; ++i)
      for (int j = 0; j <= d - i; ++j) modes_.push_back({i, j, d - i - j});
}

int TetBasis::degree(int b) const { return modes_[b][0] + modes_[b][1] + modes_[b][2]; }

void TetBasis::evaluate(const Vec3& xi, std::span<double> values) const {
  for (int b = 0; b < size(); ++b) {
    const auto& m = modes_[b];
    values[b] = dubiner3d<double>(xi[0], xi[1], xi[2], m[0], m[1], m[2]);
  }
}

std::vector<double> TetBasis::evaluate(const Vec3& xi) const {
  std::vector<double> v(size());
  evaluate(xi, v);
  return v;
}

void TetBasis::gradients(const Vec3& xi, std::span<double> grads) const {
  Dual x(xi[0]), y(xi[1]), z(xi[2]);
  x.d[0] = 1.0;
  y.d[1] = 1.0;
  z.d[2] = 1.0;
  for (int b = 0; b < size(); ++b) {
    const auto& m = modes_[b];
    const Dual v = dubiner3d<Dual>(x, y, z, m[0], m[1], m[2]);
    for (int c = 0; c < 3; ++c) grads[3 * b + c] = v.d[c];
  }
}

TriBasis::TriBasis(int order) : order_(order) {
  basis_counts(order);
  for (int d = 0; d < order; ++d)
    for (int i = 0; i <= d; ++i) modes_.push_back({i, d - i});
}

void TriBasis::evaluate(const std::array<double, 2>& chi, std::span<double> values) const {
  for (int f = 0; f < size(); ++f) values[f] = dubiner2d(chi[0], chi[1], modes_[f][0], modes_[f][1]);
}

std::vector<double> TriBasis::evaluate(const std::array<double, 2>& chi) const {
  std::vector<double> v(size());
  evaluate(chi, v);
  return v;
}

Vec3 face_to_reference(int face, const std::array<double, 2>& chi) {
  static constexpr std::array<Vec3, 4> kRefVertices{{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  const auto& fv = kFaceVertices[face];
  const Vec3& a = kRefVertices[fv[0]];
  const Vec3& b = kRefVertices[fv[1]];
  const Vec3& c = kRefVertices[fv[2]];
  return a + chi[0] * (b - a) + chi[1] * (c - a);
}

std::array<double, 2> neighbor_face_parameters(int h, const std::array<double, 2>& chi) {
  switch (h) {
    case 1: return {chi[1], chi[0]};
    case 2: return {1.0 - chi[0] - chi[1], chi[1]};
    case 3: return {chi[0], 1.0 - chi[0] - chi[1]};
    default: throw ParameterError("face orientation h must be in {1,2,3}");
  }
}

ReferenceMatrices assemble_reference_matrices(int order, int quad_degree) {
  const BasisInfo info = basis_counts(order);
  if (quad_degree < 0) quad_degree = 2 * order;
  if (quad_degree < 2 * order)
    throw AssemblyError("quadrature exactness degree " + std::to_string(quad_degree) + " is below 2*O = " +
                        std::to_string(2 * order));
  const TetBasis tet(order);
  const TriBasis tri(order);
  const int nb = info.nb3d;
  const int nf = info.nb2d;

  ReferenceMatrices m;
  m.info = info;
  m.mass = Eigen::MatrixXd::Zero(nb, nb);
  for (auto& k : m.stiffness) k = Eigen::MatrixXd::Zero(nb, nb);

  const TetQuadrature vq = tet_quadrature(quad_degree);
  std::vector<double> phi(nb), grad(3 * nb);
  for (std::size_t q = 0; q < vq.points.size(); ++q) {
    tet.evaluate(vq.points[q], phi);
    tet.gradients(vq.points[q], grad);
    const double w = vq.weights[q];
    for (int b = 0; b < nb; ++b)
      for (int a = 0; a < nb; ++a) {
        m.mass(b, a) += w * phi[b] * phi[a];
        for (int c = 0; c < 3; ++c) m.stiffness[c](b, a) += w * phi[b] * grad[3 * a + c];
      }
  }
  // Premultiply by the inverse mass matrix. For the orthonormal basis this is
  // the identity up to round-off, but the diagonal is applied explicitly.
  const Eigen::VectorXd inv_mass = m.mass.diagonal().cwiseInverse();
  for (auto& k : m.stiffness) k = inv_mass.asDiagonal() * k;

  const TriQuadrature fq = tri_quadrature(quad_degree);
  std::vector<double> psi(nf);
  for (int i = 0; i < 4; ++i) {
    m.flux_local[i] = Eigen::MatrixXd::Zero(nb, nf);
    for (std::size_t q = 0; q < fq.points.size(); ++q) {
      tet.evaluate(face_to_reference(i, fq.points[q]), phi);
      tri.evaluate(fq.points[q], psi);
      for (int b = 0; b < nb; ++b)
        for (int f = 0; f < nf; ++f) m.flux_local[i](b, f) += fq.weights[q] * phi[b] * psi[f];
    }
    m.flux_transposed[i] = m.flux_local[i].transpose() * inv_mass.asDiagonal();
  }
  for (int j = 0; j < 4; ++j)
    for (int h = 1; h <= 3; ++h) {
      Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(nb, nf);
      for (std::size_t q = 0; q < fq.points.size(); ++q) {
        tet.evaluate(face_to_reference(j, neighbor_face_parameters(h, fq.points[q])), phi);
        tri.evaluate(fq.points[q], psi);
        for (int b = 0; b < nb; ++b)
          for (int f = 0; f < nf; ++f) fb(b, f) += fq.weights[q] * phi[b] * psi[f];
      }
      m.flux_neighbor[3 * j + (h - 1)] = fb;
    }

  // Flush quadrature noise so sparsity patterns are exact and reproducible.
  auto clean = [](Eigen::MatrixXd& a) {
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    for (Eigen::Index r = 0; r < a.rows(); ++r)
      for (Eigen::Index c = 0; c < a.cols(); ++c)
        if (std::abs(a(r, c)) < 1e-13 * scale) a(r, c) = 0.0;
  };
  for (auto& k : m.stiffness) clean(k);
  for (auto& f : m.flux_local) clean(f);
  for (auto& f : m.flux_transposed) clean(f);
  for (auto& f : m.flux_neighbor) clean(f);
  return m;
}

void dump_reference_matrices(const ReferenceMatrices& m, std::ostream& os) {
  auto block = [&os](const std::string& name, const Eigen::MatrixXd& a) {
    os << "# " << name << ' ' << a.rows() << ' ' << a.cols() << '\n';
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      for (Eigen::Index c = 0; c < a.cols(); ++c) os << (c ? "," : "") << std::setprecision(17) << a(r, c);
      os << '\n';
    }
  };
  block("mass", m.mass);
  for (int c = 0; c < 3; ++c) block("K" + std::to_string(c + 1), m.stiffness[c]);
  for (int i = 0; i < 4; ++i) block("Ftilde" + std::to_string(i + 1), m.flux_local[i]);
  for (int i = 0; i < 4; ++i) block("Fhat" + std::to_string(i + 1), m.flux_transposed[i]);
  for (int j = 0; j < 4; ++j)
    for (int h = 1; h <= 3; ++h)
      block("Fbar" + std::to_string(j + 1) + "," + std::to_string(h), m.fbar(j, h));
}

}  // namespace aderlts
