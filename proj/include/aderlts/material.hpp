#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

namespace aderlts {

struct TetMesh;

/// Isotropic (visco)elastic material. Velocities are those at the reference
/// frequency; qp/qs are infinite for purely elastic media.
struct Material {
  double rho = 1.0;
  double lam = 1.0;
  double mu = 1.0;
  double qp = std::numeric_limits<double>::infinity();
  double qs = std::numeric_limits<double>::infinity();

  static Material from_velocities(double rho, double vp, double vs,
                                  double qp = std::numeric_limits<double>::infinity(),
                                  double qs = std::numeric_limits<double>::infinity());
  double vp() const;
  double vs() const;
  /// Throws InvalidMaterialError when an invariant is violated.
  void validate() const;
};

/// Reads the per-element material sidecar `elem_id, rho, vp, vs, qp, qs`,
/// where elem_id is the tet's element tag in the mesh file. Every element
/// must be listed exactly once.
std::vector<Material> load_materials(const std::filesystem::path& path, const TetMesh& mesh);
void write_materials(const std::filesystem::path& path, const TetMesh& mesh, const std::vector<Material>& mats);

}  // namespace aderlts
