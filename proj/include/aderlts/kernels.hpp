#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <vector>

#include "aderlts/basis.hpp"
#include "aderlts/equations.hpp"

namespace aderlts {

/// Dense: reference products use dense matrices and only the zero blocks of
/// the element operators are skipped. Sparse: reference products also skip
/// every zero entry through CSR storage. Both give the same result up to
/// summation order; auto picks dense for W = 1 and sparse for fused runs.
enum class KernelPath { kAuto, kDense, kSparse };

/// Element operators converted to the working precision. Blocks that are zero
/// by construction (stress-stress and velocity-velocity in the elastic
/// Jacobians, stress columns of the anelastic ones, velocity rows of the
/// coupling) are checked at conversion and never touched.
template <typename Real>
struct KernelElementOps {
  using M99 = Eigen::Matrix<Real, 9, 9, Eigen::RowMajor | Eigen::DontAlign>;
  using M69 = Eigen::Matrix<Real, 6, 9, Eigen::RowMajor | Eigen::DontAlign>;
  using M96 = Eigen::Matrix<Real, 9, 6, Eigen::RowMajor | Eigen::DontAlign>;
  std::array<M99, 3> star_e;
  std::array<M69, 3> star_a;
  std::vector<M96> coupling;
  std::array<M99, 4> flux_minus_e, flux_plus_e;
  std::array<M69, 4> flux_minus_a, flux_plus_a;

  static KernelElementOps convert(const ElementOperators& op);
};

/// Per-element ADER-DG kernels for a fixed order, mechanism count and fusion
/// width W. Arrays are laid out [quantity][mode][w] with w innermost and are
/// contiguous; every kernel accumulates into its output.
///
///   state / volume / surface outputs : N^q x B x W
///   derivatives                      : O x N^q x B x W
///   elastic time integral / buffers  : 9 x B x W
///   face payloads                    : 9 x F x W
template <typename Real>
class KernelSet {
 public:
  KernelSet(const ReferenceMatrices& ref, std::vector<double> omega, int width, KernelPath path = KernelPath::kAuto);

  int order() const { return order_; }
  int modes() const { return nb_; }
  int face_modes() const { return nf_; }
  int width() const { return w_; }
  int quantities() const { return nq_; }
  int mechanisms() const { return static_cast<int>(omega_.size()); }
  KernelPath path() const { return path_; }
  std::size_t state_size() const { return static_cast<std::size_t>(nq_) * nb_ * w_; }
  std::size_t elastic_size() const { return static_cast<std::size_t>(kElasticVars) * nb_ * w_; }
  std::size_t payload_size() const { return static_cast<std::size_t>(kElasticVars) * nf_ * w_; }
  std::size_t derivative_size() const { return state_size() * order_; }

  /// Overwrites `derivs` with the time derivatives 0..O-1 at the expansion point.
  void ck_derivatives(std::span<const Real> q, const KernelElementOps<Real>& op, std::span<Real> derivs) const;
  /// Overwrites `out` with the first `rows` quantities of
  /// sum_d dt^(d+1)/(d+1)! derivs[d].
  void taylor_integrate(std::span<const Real> derivs, double dt, int rows, std::span<Real> out) const;
  /// Overwrites `out` with sum_d tau^d/d! derivs[d].
  void taylor_evaluate(std::span<const Real> derivs, double tau, std::span<Real> out) const;
  void volume(std::span<const Real> t, const KernelElementOps<Real>& op, std::span<Real> out) const;
  void surface_local(std::span<const Real> t, const KernelElementOps<Real>& op, std::span<Real> out) const;
  /// Accumulates buffer * Fbar(j, h) into `payload` (9 x F x W).
  void face_payload(std::span<const Real> buffer, int j, int h, std::span<Real> payload) const;
  /// Neighbour contribution through local face i from its payload.
  void surface_neighbor(int face, std::span<const Real> payload, const KernelElementOps<Real>& op,
                        std::span<Real> out) const;

 private:
  struct Csr {
    std::vector<int> row_start;
    std::vector<int> col;
    std::vector<Real> val;
  };
  using MatR = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  struct RefOp {
    MatR right;       // out = X * right, (in modes) x (out modes)
    MatR right_t;     // transpose of `right`
    Csr csr;          // CSR of right_t: rows are output modes
  };
  RefOp make_ref(const Eigen::MatrixXd& right) const;
  /// out[rows][b'][w] += sum_b in[rows][b][w] * R(b, b').
  void ref_product(const Real* in, int rows, const RefOp& r, Real* out) const;
  /// out rows [r0, r0+nr) += S(block) * in rows [c0, c0+nc); each row holds `len` entries.
  template <typename Mat>
  void star_product(const Mat& s, int r0, int nr, int c0, int nc, const Real* in, int len, Real* out) const;

  int order_, nb_, nf_, w_, nq_;
  KernelPath path_;
  std::vector<Real> omega_;
  std::array<RefOp, 3> ck_;       // K_c^T
  std::array<RefOp, 3> vol_;      // K_c
  std::array<RefOp, 4> trace_;    // Ftilde_i
  std::array<RefOp, 4> lift_;     // Fhat_i
  std::array<RefOp, 12> neigh_;   // Fbar(j, h)
};

extern template struct KernelElementOps<float>;
extern template struct KernelElementOps<double>;
extern template class KernelSet<float>;
extern template class KernelSet<double>;

}  // namespace aderlts
