#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "aderlts/common.hpp"

namespace aderlts {

enum class BoundaryKind : std::uint8_t { kInterior = 0, kFreeSurface = 1, kOutflow = 2 };

std::string to_string(BoundaryKind kind);
BoundaryKind boundary_kind_from_name(const std::string& name);

/// Conforming tetrahedral mesh. Elements reference vertices by index; the
/// optional `identify` map sends every vertex to a canonical id so periodic
/// images are glued together when building adjacency.
struct TetMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::int64_t, 4>> elements;
  std::vector<std::int64_t> element_tags;  // file tags, used by the material sidecar
  /// Boundary tags keyed by the sorted canonical vertex triple.
  std::vector<std::pair<std::array<std::int64_t, 3>, BoundaryKind>> boundary_tags;
  std::vector<std::int64_t> identify;  // empty: identity

  std::int64_t num_elements() const { return static_cast<std::int64_t>(elements.size()); }
  std::int64_t canonical(std::int64_t v) const { return identify.empty() ? v : identify[v]; }
};

/// Neighbour record of one local face.
struct FaceLink {
  std::int64_t neighbor = -1;  // -1 on the domain boundary
  int neighbor_face = -1;      // j in {0..3}
  int orientation = 0;         // h in {1,2,3}
  BoundaryKind boundary = BoundaryKind::kOutflow;

  bool interior() const { return neighbor >= 0; }
};

using FaceAdjacency = std::vector<std::array<FaceLink, 4>>;

struct FaceGeometry {
  double area = 0.0;
  Vec3 normal{};  // outward unit normal
  Vec3 tangent1{};
  Vec3 tangent2{};
};

struct ElementGeometry {
  std::array<Vec3, 4> vertices{};
  Eigen::Matrix3d jacobian;          // columns: v1-v0, v2-v0, v3-v0
  Eigen::Matrix3d inverse_jacobian;  // d(xi_c)/d(x_d) at (c, d)
  double determinant = 0.0;
  double volume = 0.0;
  double insphere_diameter = 0.0;
  std::array<FaceGeometry, 4> faces{};

  Vec3 centroid() const;
  /// Reference coordinates of a physical point.
  Vec3 to_reference(const Vec3& x) const;
  Vec3 to_physical(const Vec3& xi) const;
};

/// Reorders vertices to positive orientation, checks conformity and tags.
/// Throws MeshLoadError / TopologyError with element or face ids.
void validate_and_orient(TetMesh& mesh);

FaceAdjacency build_adjacency(const TetMesh& mesh);

ElementGeometry element_geometry(const TetMesh& mesh, std::int64_t k);
std::vector<ElementGeometry> compute_geometry(const TetMesh& mesh);

/// Index of the element containing x (smallest index on shared boundaries),
/// or -1.
std::int64_t locate_point(const std::vector<ElementGeometry>& geometry, const Vec3& x, double tol = 1e-10);

/// Gmsh MSH 4.1 ASCII subset: nodes, 4-node tets, 3-node boundary triangles
/// with physical names `free-surface` / `outflow`.
TetMesh load_mesh(const std::filesystem::path& path);
void write_mesh(const TetMesh& mesh, const std::filesystem::path& path);

/// Structured box split into 6 tets per cell (Kuhn subdivision). Axis
/// coordinates may be non-uniform to produce graded meshes.
struct BoxSpec {
  std::vector<double> x, y, z;
  bool periodic = false;
  BoundaryKind boundary = BoundaryKind::kOutflow;
  /// Overrides `boundary` on the z = max face when set.
  bool free_surface_top = false;
};

TetMesh generate_box(const BoxSpec& spec);
std::vector<double> uniform_axis(double lo, double hi, int cells);

}  // namespace aderlts
