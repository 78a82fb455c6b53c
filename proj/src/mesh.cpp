#include "aderlts/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "aderlts/basis.hpp"

namespace aderlts {
namespace {

using Triple = std::array<std::int64_t, 3>;

Triple sorted(Triple t) {
  std::sort(t.begin(), t.end());
  return t;
}

Triple face_vertices(const TetMesh& mesh, std::int64_t k, int i) {
  const auto& e = mesh.elements[k];
  const auto& fv = kFaceVertices[i];
  return {mesh.canonical(e[fv[0]]), mesh.canonical(e[fv[1]]), mesh.canonical(e[fv[2]])};
}

double signed_det(const TetMesh& mesh, const std::array<std::int64_t, 4>& e) {
  const Vec3& v0 = mesh.vertices[e[0]];
  const Vec3 a = mesh.vertices[e[1]] - v0;
  const Vec3 b = mesh.vertices[e[2]] - v0;
  const Vec3 c = mesh.vertices[e[3]] - v0;
  return dot(a, cross(b, c));
}

}  // namespace

std::string to_string(BoundaryKind kind) {
  switch (kind) {
    case BoundaryKind::kFreeSurface: return "free-surface";
    case BoundaryKind::kOutflow: return "outflow";
    case BoundaryKind::kInterior: return "interior";
  }
  return "unknown";
}

BoundaryKind boundary_kind_from_name(const std::string& name) {
  if (name == "free-surface") return BoundaryKind::kFreeSurface;
  if (name == "outflow") return BoundaryKind::kOutflow;
  throw MeshLoadError("unknown boundary tag '" + name + "'");
}

void validate_and_orient(TetMesh& mesh) {
  if (mesh.elements.empty()) throw MeshLoadError("mesh has no tetrahedra");
  const auto nv = static_cast<std::int64_t>(mesh.vertices.size());
  std::map<Triple, int> counts;
  for (std::int64_t k = 0; k < mesh.num_elements(); ++k) {
    auto& e = mesh.elements[k];
    for (auto v : e)
      if (v < 0 || v >= nv) throw MeshLoadError("element " + std::to_string(k) + " references a missing vertex");
    double det = signed_det(mesh, e);
    double scale = 0.0;
    for (int i = 1; i < 4; ++i) {
      const Vec3 d = mesh.vertices[e[i]] - mesh.vertices[e[0]];
      scale = std::max(scale, std::sqrt(dot(d, d)));
    }
    if (std::abs(det) <= 1e-12 * scale * scale * scale)
      throw GeometryError("element " + std::to_string(k) + " has zero volume");
    if (det < 0.0) std::swap(e[1], e[2]);
    for (int i = 0; i < 4; ++i) {
      const Triple f = face_vertices(mesh, k, i);
      if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2])
        throw TopologyError("element " + std::to_string(k) + " face " + std::to_string(i) +
                            " collapses under periodic identification");
      if (++counts[sorted(f)] > 2)
        throw MeshLoadError("nonconforming mesh: face of element " + std::to_string(k) + " (local face " +
                            std::to_string(i) + ") is shared by more than two elements");
    }
  }
  for (const auto& [key, kind] : mesh.boundary_tags) {
    auto it = counts.find(sorted(key));
    if (it == counts.end()) throw MeshLoadError("boundary tag references a face that is not in the mesh");
    if (it->second != 1) throw MeshLoadError("boundary tag on an interior face");
  }
}

FaceAdjacency build_adjacency(const TetMesh& mesh) {
  struct Owner {
    std::int64_t element;
    int face;
  };
  std::map<Triple, std::vector<Owner>> owners;
  for (std::int64_t k = 0; k < mesh.num_elements(); ++k)
    for (int i = 0; i < 4; ++i) owners[sorted(face_vertices(mesh, k, i))].push_back({k, i});

  std::map<Triple, BoundaryKind> tags;
  for (const auto& [key, kind] : mesh.boundary_tags) tags[sorted(key)] = kind;

  FaceAdjacency adj(mesh.elements.size());
  for (const auto& [key, list] : owners) {
    if (list.size() > 2)
      throw TopologyError("face of element " + std::to_string(list[0].element) + " is shared by " +
                          std::to_string(list.size()) + " elements");
    if (list.size() == 1) {
      FaceLink link;
      auto it = tags.find(key);
      link.boundary = it == tags.end() ? BoundaryKind::kOutflow : it->second;
      adj[list[0].element][list[0].face] = link;
      continue;
    }
    for (int side = 0; side < 2; ++side) {
      const Owner& self = list[side];
      const Owner& other = list[1 - side];
      const Triple mine = face_vertices(mesh, self.element, self.face);
      const Triple theirs = face_vertices(mesh, other.element, other.face);
      int h = 0;
      for (int p = 0; p < 3; ++p)
        if (theirs[p] == mine[0]) h = p + 1;
      // The neighbour must traverse the shared face in reverse.
      const std::array<Triple, 3> reversed{{{mine[0], mine[2], mine[1]},
                                            {mine[1], mine[0], mine[2]},
                                            {mine[2], mine[1], mine[0]}}};
      if (h == 0 || theirs != reversed[h - 1])
        throw TopologyError("inconsistent orientation between elements " + std::to_string(self.element) + " and " +
                            std::to_string(other.element));
      FaceLink link;
      link.neighbor = other.element;
      link.neighbor_face = other.face;
      link.orientation = h;
      link.boundary = BoundaryKind::kInterior;
      adj[self.element][self.face] = link;
    }
  }
  return adj;
}

Vec3 ElementGeometry::centroid() const {
  return 0.25 * (vertices[0] + vertices[1] + vertices[2] + vertices[3]);
}

Vec3 ElementGeometry::to_reference(const Vec3& x) const {
  const Eigen::Vector3d d(x[0] - vertices[0][0], x[1] - vertices[0][1], x[2] - vertices[0][2]);
  const Eigen::Vector3d xi = inverse_jacobian * d;
  return {xi[0], xi[1], xi[2]};
}

Vec3 ElementGeometry::to_physical(const Vec3& xi) const {
  const Eigen::Vector3d x = jacobian * Eigen::Vector3d(xi[0], xi[1], xi[2]);
  return {vertices[0][0] + x[0], vertices[0][1] + x[1], vertices[0][2] + x[2]};
}

ElementGeometry element_geometry(const TetMesh& mesh, std::int64_t k) {
  ElementGeometry g;
  const auto& e = mesh.elements[k];
  for (int v = 0; v < 4; ++v) g.vertices[v] = mesh.vertices[e[v]];
  for (int c = 0; c < 3; ++c)
    for (int d = 0; d < 3; ++d) g.jacobian(d, c) = g.vertices[c + 1][d] - g.vertices[0][d];
  g.determinant = g.jacobian.determinant();
  if (!(g.determinant > 0.0))
    throw GeometryError("element " + std::to_string(k) + " has non-positive volume");
  g.volume = g.determinant / 6.0;
  g.inverse_jacobian = g.jacobian.inverse();
  double area_sum = 0.0;
  for (int i = 0; i < 4; ++i) {
    const auto& fv = kFaceVertices[i];
    const Vec3 ab = g.vertices[fv[1]] - g.vertices[fv[0]];
    const Vec3 ac = g.vertices[fv[2]] - g.vertices[fv[0]];
    const Vec3 n = cross(ab, ac);
    const double len = std::sqrt(dot(n, n));
    if (len == 0.0) throw GeometryError("element " + std::to_string(k) + " has a degenerate face");
    FaceGeometry& f = g.faces[i];
    f.area = 0.5 * len;
    f.normal = (1.0 / len) * n;
    f.tangent1 = (1.0 / std::sqrt(dot(ab, ab))) * ab;
    f.tangent2 = cross(f.normal, f.tangent1);
    area_sum += f.area;
  }
  g.insphere_diameter = 6.0 * g.volume / area_sum;
  return g;
}

std::vector<ElementGeometry> compute_geometry(const TetMesh& mesh) {
  std::vector<ElementGeometry> out;
  out.reserve(mesh.elements.size());
  for (std::int64_t k = 0; k < mesh.num_elements(); ++k) out.push_back(element_geometry(mesh, k));
  return out;
}

std::int64_t locate_point(const std::vector<ElementGeometry>& geometry, const Vec3& x, double tol) {
  for (std::size_t k = 0; k < geometry.size(); ++k) {
    const Vec3 xi = geometry[k].to_reference(x);
    if (xi[0] >= -tol && xi[1] >= -tol && xi[2] >= -tol && xi[0] + xi[1] + xi[2] <= 1.0 + tol)
      return static_cast<std::int64_t>(k);
  }
  return -1;
}

std::vector<double> uniform_axis(double lo, double hi, int cells) {
  if (cells < 1) throw ParameterError("uniform_axis: need at least one cell");
  std::vector<double> a(cells + 1);
  for (int i = 0; i <= cells; ++i) a[i] = lo + (hi - lo) * i / cells;
  return a;
}

TetMesh generate_box(const BoxSpec& spec) {
  const int nx = static_cast<int>(spec.x.size()) - 1;
  const int ny = static_cast<int>(spec.y.size()) - 1;
  const int nz = static_cast<int>(spec.z.size()) - 1;
  if (nx < 1 || ny < 1 || nz < 1) throw ParameterError("generate_box: every axis needs at least one cell");
  // With fewer than three periodic cells distinct faces alias each other.
  if (spec.periodic && (nx < 3 || ny < 3 || nz < 3))
    throw ParameterError("generate_box: periodic boxes need at least three cells per axis");
  TetMesh mesh;
  auto vid = [&](int i, int j, int k) { return static_cast<std::int64_t>((k * (ny + 1) + j) * (nx + 1) + i); };
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i) mesh.vertices.push_back({spec.x[i], spec.y[j], spec.z[k]});
  if (spec.periodic) {
    mesh.identify.resize(mesh.vertices.size());
    for (int k = 0; k <= nz; ++k)
      for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) mesh.identify[vid(i, j, k)] = vid(i % nx, j % ny, k % nz);
  }
  static constexpr std::array<std::array<int, 3>, 6> kPerms{
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        for (const auto& p : kPerms) {
          std::array<int, 3> off{0, 0, 0};
          std::array<std::int64_t, 4> tet{};
          tet[0] = vid(i, j, k);
          for (int s = 0; s < 3; ++s) {
            off[p[s]] = 1;
            tet[s + 1] = vid(i + off[0], j + off[1], k + off[2]);
          }
          mesh.elements.push_back(tet);
          mesh.element_tags.push_back(mesh.num_elements());
        }
  if (!spec.periodic) {
    std::map<Triple, std::pair<Triple, int>> counts;
    for (std::int64_t e = 0; e < mesh.num_elements(); ++e)
      for (int f = 0; f < 4; ++f) {
        const Triple t = face_vertices(mesh, e, f);
        auto& c = counts[sorted(t)];
        c.first = t;
        ++c.second;
      }
    const double ztop = spec.z.back();
    for (const auto& [key, c] : counts) {
      if (c.second != 1) continue;
      BoundaryKind kind = spec.boundary;
      if (spec.free_surface_top) {
        bool top = true;
        for (auto v : key) top = top && mesh.vertices[v][2] == ztop;
        if (top) kind = BoundaryKind::kFreeSurface;
      }
      mesh.boundary_tags.push_back({c.first, kind});
    }
  }
  validate_and_orient(mesh);
  return mesh;
}

}  // namespace aderlts
