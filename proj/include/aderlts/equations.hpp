#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "aderlts/material.hpp"
#include "aderlts/mesh.hpp"

namespace aderlts {

using Mat9 = Eigen::Matrix<double, 9, 9>;
using Mat69 = Eigen::Matrix<double, 6, 9>;
using Mat96 = Eigen::Matrix<double, 9, 6>;

/// Relaxation mechanisms of the generalized Maxwell body. `yp`/`ys` are the
/// dimensionless weights fitted for one (qp, qs) pair; they are empty or zero
/// for elastic media.
struct RelaxationSet {
  std::vector<double> omega;  // rad/s, strictly increasing
  std::vector<double> yp;
  std::vector<double> ys;
  double center_frequency = 0.0;  // Hz, frequency at which input velocities hold
  std::vector<std::string> warnings;

  int mechanisms() const { return static_cast<int>(omega.size()); }
};

/// Relaxation frequencies for m mechanisms, log-spaced over a two-decade band
/// centred on center_freq (a single mechanism sits at the centre).
std::vector<double> relaxation_frequencies(double center_freq, int m);

/// Least-squares weights reproducing a constant Q over the band. Infinite Q
/// gives zero weights.
std::vector<double> fit_weights(const std::vector<double>& omega, double q, std::vector<std::string>* warnings = nullptr);

RelaxationSet fit_relaxation(double qp, double qs, double center_freq, int m);

/// Same frequencies as `base`, weights refitted for another material.
RelaxationSet refit(const RelaxationSet& base, double qp, double qs);

/// Quality factor realized by the given weights at angular frequency w.
double effective_q(const std::vector<double>& omega, const std::vector<double>& weights, double w);

/// Material with unrelaxed moduli, so that the relaxed response matches the
/// input velocities at the centre frequency.
Material unrelaxed_material(const Material& mat, const RelaxationSet& relax);

/// Constant-coefficient blocks of the viscoelastic system. Elastic Jacobians
/// act on (sxx, syy, szz, sxy, syz, sxz, u, v, w); anelastic blocks map the
/// elastic state to the six memory variables of a mechanism, to be scaled by
/// its frequency.
struct JacobianSet {
  std::array<Mat9, 3> elastic;
  std::array<Mat69, 3> anelastic;
  std::vector<Mat96> coupling;  // one block per mechanism
  std::vector<double> decay;    // diagonal of the anelastic self-coupling, -omega_l

  int mechanisms() const { return static_cast<int>(coupling.size()); }
  /// Full N^q x N^q Jacobian in direction d (0..2).
  Eigen::MatrixXd full_jacobian(int d, const std::vector<double>& omega) const;
  /// Full N^q x N^q right-hand-side coupling matrix.
  Eigen::MatrixXd full_coupling() const;
};

/// Uses the material's moduli as given; callers pass unrelaxed moduli for
/// viscoelastic runs.
JacobianSet build_jacobians(const Material& mat, const RelaxationSet& relax);

/// Normal Jacobian n_x A + n_y B + n_z C.
Mat9 normal_jacobian(const JacobianSet& jac, const Vec3& n);
Mat69 normal_anelastic(const JacobianSet& jac, const Vec3& n);

/// Maps a state expressed in the face frame (normal, tangent1, tangent2) to
/// the global frame.
Mat9 face_rotation(const FaceGeometry& face);

struct ElementOperators {
  std::array<Mat9, 3> star_e;
  std::array<Mat69, 3> star_a;
  std::vector<Mat96> coupling;
  std::array<Mat9, 4> flux_minus_e;
  std::array<Mat9, 4> flux_plus_e;
  std::array<Mat69, 4> flux_minus_a;
  std::array<Mat69, 4> flux_plus_a;
};

/// Upwind flux matrices for one face, already scaled by -area / (3 volume).
struct FaceFlux {
  Mat9 minus_e, plus_e;
  Mat69 minus_a, plus_a;
};

FaceFlux build_face_flux(const FaceGeometry& face, double scale, const Material& inside, const Material& outside,
                         BoundaryKind kind, const JacobianSet& jac_inside);

/// Per-element operators. Viscoelastic weights are refitted per element from
/// its qp/qs using the frequencies in `relax`.
std::vector<ElementOperators> build_element_operators(const std::vector<ElementGeometry>& geometry,
                                                      const FaceAdjacency& adjacency,
                                                      const std::vector<Material>& mats, const RelaxationSet& relax);

}  // namespace aderlts
