#pragma once

#include <Eigen/Dense>
#include <array>
#include <iosfwd>
#include <span>
#include <vector>

#include "aderlts/common.hpp"

namespace aderlts {

/// Basis sizes for polynomial order O (degree O-1).
struct BasisInfo {
  int order = 0;
  int nb3d = 0;  // tetrahedral modes
  int nb2d = 0;  // triangular (face) modes
};

BasisInfo basis_counts(int order);

/// Orthonormal Dubiner modal basis on the reference tetrahedron
/// (0,0,0),(1,0,0),(0,1,0),(0,0,1). Modes are ordered hierarchically by
/// total degree, so the first mode is the constant.
class TetBasis {
 public:
  explicit TetBasis(int order);

  int order() const { return order_; }
  int size() const { return static_cast<int>(modes_.size()); }
  /// Total polynomial degree of mode b.
  int degree(int b) const;

  void evaluate(const Vec3& xi, std::span<double> values) const;
  std::vector<double> evaluate(const Vec3& xi) const;
  /// Gradients w.r.t. the reference coordinates, laid out [b][c].
  void gradients(const Vec3& xi, std::span<double> grads) const;

 private:
  int order_;
  std::vector<std::array<int, 3>> modes_;
};

/// Orthonormal Dubiner basis on the reference triangle (0,0),(1,0),(0,1).
class TriBasis {
 public:
  explicit TriBasis(int order);
  int size() const { return static_cast<int>(modes_.size()); }
  void evaluate(const std::array<double, 2>& chi, std::span<double> values) const;
  std::vector<double> evaluate(const std::array<double, 2>& chi) const;

 private:
  int order_;
  std::vector<std::array<int, 2>> modes_;
};

/// Local vertex ids of face i, ordered so the face normal points outward.
inline constexpr std::array<std::array<int, 3>, 4> kFaceVertices{{{0, 2, 1}, {0, 1, 3}, {0, 3, 2}, {1, 2, 3}}};

/// Reference coordinates of the point with face parameters chi on face i.
Vec3 face_to_reference(int face, const std::array<double, 2>& chi);
/// Maps local face parameters to the neighbour's face parameters for
/// orientation h in {1,2,3}.
std::array<double, 2> neighbor_face_parameters(int h, const std::array<double, 2>& chi);

/// Reference operators. All matrices are already scaled by the inverse mass
/// matrix, which is the identity for the orthonormal basis.
///   K[c](b, a)       = ∫ φ_b ∂_c φ_a                       (B x B)
///   Ftilde[i](b, f)  = ∫_face ψ_f φ_b(face_i)               (B x F)
///   Fhat[i](f, a)    = Ftilde[i](a, f)                      (F x B)
///   Fbar[3j+h-1](b, f) = ∫_face ψ_f φ_b(face_j(σ_h))        (B x F)
struct ReferenceMatrices {
  BasisInfo info;
  Eigen::MatrixXd mass;
  std::array<Eigen::MatrixXd, 3> stiffness;
  std::array<Eigen::MatrixXd, 4> flux_local;
  std::array<Eigen::MatrixXd, 4> flux_transposed;
  std::array<Eigen::MatrixXd, 12> flux_neighbor;

  const Eigen::MatrixXd& fbar(int j, int h) const { return flux_neighbor[3 * j + (h - 1)]; }
};

/// Assembles all reference matrices by quadrature. Throws AssemblyError if
/// quad_degree < 2 * order.
ReferenceMatrices assemble_reference_matrices(int order, int quad_degree = -1);

/// Writes every matrix as a dense text block for inspection and golden files.
void dump_reference_matrices(const ReferenceMatrices& m, std::ostream& os);

}  // namespace aderlts
