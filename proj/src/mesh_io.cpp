#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_map>

#include "aderlts/material.hpp"
#include "aderlts/mesh.hpp"

namespace aderlts {
namespace {

constexpr int kMshTriangle = 2;
constexpr int kMshTet = 4;

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : in_(path), path_(path.string()) {
    if (!in_) throw MeshLoadError("cannot open mesh file " + path_);
  }

  template <class T>
  T next() {
    T v;
    if (!(in_ >> v)) throw MeshLoadError(path_ + ": unexpected end of file or malformed number");
    return v;
  }

  bool word(std::string& w) { return static_cast<bool>(in_ >> w); }

  void expect(const std::string& w) {
    std::string got;
    if (!(in_ >> got) || got != w) throw MeshLoadError(path_ + ": expected " + w + ", got '" + got + "'");
  }

  std::string quoted() {
    std::string s;
    in_ >> std::ws;
    std::getline(in_, s);
    const auto a = s.find('"');
    const auto b = s.rfind('"');
    if (a == std::string::npos || b == a) throw MeshLoadError(path_ + ": malformed physical name");
    return s.substr(a + 1, b - a - 1);
  }

  void skip_section(const std::string& name) {
    const std::string end = "$End" + name.substr(1);
    std::string w;
    while (in_ >> w)
      if (w == end) return;
    throw MeshLoadError(path_ + ": unterminated section " + name);
  }

 private:
  std::ifstream in_;
  std::string path_;
};

}  // namespace

TetMesh load_mesh(const std::filesystem::path& path) {
  Reader r(path);
  TetMesh mesh;
  std::map<int, std::string> physical_names;        // 2D physical tag -> name
  std::map<int, std::vector<int>> surface_physical;  // surface entity -> physical tags
  std::unordered_map<std::int64_t, std::int64_t> node_index;
  std::vector<std::pair<int, std::array<std::int64_t, 3>>> triangles;  // entity, node tags
  std::vector<std::int64_t> tet_tags;
  std::vector<std::array<std::int64_t, 4>> tet_nodes;
  bool seen_format = false;

  std::string section;
  while (r.word(section)) {
    if (section == "$MeshFormat") {
      const auto version = r.next<double>();
      const int file_type = r.next<int>();
      r.next<int>();
      if (version < 4.1 || version >= 5.0 || file_type != 0)
        throw MeshLoadError(path.string() + ": only MSH 4.1 ASCII is supported");
      r.expect("$EndMeshFormat");
      seen_format = true;
    } else if (section == "$PhysicalNames") {
      const int n = r.next<int>();
      for (int i = 0; i < n; ++i) {
        const int dim = r.next<int>();
        const int tag = r.next<int>();
        const std::string name = r.quoted();
        if (dim == 2) physical_names[tag] = name;
      }
      r.expect("$EndPhysicalNames");
    } else if (section == "$Entities") {
      const auto np = r.next<std::size_t>();
      const auto nc = r.next<std::size_t>();
      const auto ns = r.next<std::size_t>();
      const auto nv = r.next<std::size_t>();
      for (std::size_t i = 0; i < np; ++i) {
        r.next<int>();
        for (int k = 0; k < 3; ++k) r.next<double>();
        const auto nphys = r.next<std::size_t>();
        for (std::size_t k = 0; k < nphys; ++k) r.next<int>();
      }
      auto read_bounded = [&](int dim, std::size_t count) {
        for (std::size_t i = 0; i < count; ++i) {
          const int tag = r.next<int>();
          for (int k = 0; k < 6; ++k) r.next<double>();
          const auto nphys = r.next<std::size_t>();
          std::vector<int> phys(nphys);
          for (auto& p : phys) p = r.next<int>();
          if (dim == 2) surface_physical[tag] = phys;
          const auto nbound = r.next<std::size_t>();
          for (std::size_t k = 0; k < nbound; ++k) r.next<int>();
        }
      };
      read_bounded(1, nc);
      read_bounded(2, ns);
      read_bounded(3, nv);
      r.expect("$EndEntities");
    } else if (section == "$Nodes") {
      const auto nblocks = r.next<std::size_t>();
      r.next<std::size_t>();
      r.next<std::int64_t>();
      r.next<std::int64_t>();
      for (std::size_t b = 0; b < nblocks; ++b) {
        r.next<int>();
        r.next<int>();
        if (r.next<int>() != 0) throw MeshLoadError(path.string() + ": parametric nodes are not supported");
        const auto n = r.next<std::size_t>();
        std::vector<std::int64_t> tags(n);
        for (auto& t : tags) t = r.next<std::int64_t>();
        for (std::size_t i = 0; i < n; ++i) {
          Vec3 x{r.next<double>(), r.next<double>(), r.next<double>()};
          node_index[tags[i]] = static_cast<std::int64_t>(mesh.vertices.size());
          mesh.vertices.push_back(x);
        }
      }
      r.expect("$EndNodes");
    } else if (section == "$Elements") {
      const auto nblocks = r.next<std::size_t>();
      r.next<std::size_t>();
      r.next<std::int64_t>();
      r.next<std::int64_t>();
      for (std::size_t b = 0; b < nblocks; ++b) {
        r.next<int>();
        const int entity = r.next<int>();
        const int type = r.next<int>();
        const auto n = r.next<std::size_t>();
        int nodes_per = 0;
        switch (type) {
          case 15: nodes_per = 1; break;
          case 1: nodes_per = 2; break;
          case kMshTriangle: nodes_per = 3; break;
          case kMshTet: nodes_per = 4; break;
          default:
            throw MeshLoadError(path.string() + ": unsupported element type " + std::to_string(type));
        }
        for (std::size_t i = 0; i < n; ++i) {
          const auto tag = r.next<std::int64_t>();
          std::array<std::int64_t, 4> v{};
          for (int k = 0; k < nodes_per; ++k) v[k] = r.next<std::int64_t>();
          if (type == kMshTet) {
            tet_tags.push_back(tag);
            tet_nodes.push_back(v);
          } else if (type == kMshTriangle) {
            triangles.push_back({entity, {v[0], v[1], v[2]}});
          }
        }
      }
      r.expect("$EndElements");
    } else if (!section.empty() && section[0] == '$') {
      r.skip_section(section);
    } else {
      throw MeshLoadError(path.string() + ": unexpected token '" + section + "'");
    }
  }
  if (!seen_format) throw MeshLoadError(path.string() + ": missing $MeshFormat");

  auto lookup = [&](std::int64_t tag) {
    auto it = node_index.find(tag);
    if (it == node_index.end()) throw MeshLoadError(path.string() + ": element references unknown node " + std::to_string(tag));
    return it->second;
  };
  for (std::size_t e = 0; e < tet_nodes.size(); ++e) {
    std::array<std::int64_t, 4> v{};
    for (int k = 0; k < 4; ++k) v[k] = lookup(tet_nodes[e][k]);
    mesh.elements.push_back(v);
    mesh.element_tags.push_back(tet_tags[e]);
  }
  for (const auto& [entity, nodes] : triangles) {
    auto it = surface_physical.find(entity);
    if (it == surface_physical.end() || it->second.empty()) continue;
    std::optional<BoundaryKind> kind;
    for (int phys : it->second) {
      auto name = physical_names.find(phys);
      if (name == physical_names.end())
        throw MeshLoadError(path.string() + ": surface entity " + std::to_string(entity) +
                            " has an unnamed physical group " + std::to_string(phys));
      kind = boundary_kind_from_name(name->second);
    }
    mesh.boundary_tags.push_back({{lookup(nodes[0]), lookup(nodes[1]), lookup(nodes[2])}, *kind});
  }
  validate_and_orient(mesh);
  return mesh;
}

void write_mesh(const TetMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw MeshLoadError("cannot write mesh file " + path.string());
  out << std::setprecision(17);
  out << "$MeshFormat\n4.1 0 8\n$EndMeshFormat\n";
  std::array<std::vector<std::array<std::int64_t, 3>>, 2> tris;
  for (const auto& [t, kind] : mesh.boundary_tags) tris[kind == BoundaryKind::kFreeSurface ? 0 : 1].push_back(t);
  out << "$PhysicalNames\n3\n2 1 \"free-surface\"\n2 2 \"outflow\"\n3 3 \"volume\"\n$EndPhysicalNames\n";
  out << "$Entities\n0 0 2 1\n";
  out << "1 0 0 0 0 0 0 1 1 0\n2 0 0 0 0 0 0 1 2 0\n";
  out << "1 0 0 0 0 0 0 1 3 0\n$EndEntities\n";
  const auto nv = mesh.vertices.size();
  out << "$Nodes\n1 " << nv << " 1 " << nv << "\n3 1 0 " << nv << "\n";
  for (std::size_t i = 0; i < nv; ++i) out << i + 1 << '\n';
  for (const auto& v : mesh.vertices) out << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
  out << "$EndNodes\n";
  const std::size_t ntri = tris[0].size() + tris[1].size();
  const std::size_t total = mesh.elements.size() + ntri;
  int blocks = 1 + (tris[0].empty() ? 0 : 1) + (tris[1].empty() ? 0 : 1);
  std::int64_t max_tag = 0;
  for (auto t : mesh.element_tags) max_tag = std::max(max_tag, t);
  out << "$Elements\n" << blocks << ' ' << total << " 1 " << max_tag + static_cast<std::int64_t>(ntri) << '\n';
  out << "3 1 4 " << mesh.elements.size() << '\n';
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    out << mesh.element_tags[e];
    for (auto v : mesh.elements[e]) out << ' ' << v + 1;
    out << '\n';
  }
  std::int64_t tag = max_tag;
  for (int s = 0; s < 2; ++s) {
    if (tris[s].empty()) continue;
    out << "2 " << s + 1 << " 2 " << tris[s].size() << '\n';
    for (const auto& t : tris[s]) out << ++tag << ' ' << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  }
  out << "$EndElements\n";
  if (!out) throw MeshLoadError("failed while writing " + path.string());
}

std::vector<Material> load_materials(const std::filesystem::path& path, const TetMesh& mesh) {
  std::ifstream in(path);
  if (!in) throw MeshLoadError("cannot open material file " + path.string());
  std::unordered_map<std::int64_t, std::size_t> index;
  for (std::size_t e = 0; e < mesh.element_tags.size(); ++e) index[mesh.element_tags[e]] = e;
  std::vector<Material> mats(mesh.elements.size());
  std::vector<bool> seen(mesh.elements.size(), false);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line.rfind("elem_id", 0) == 0) continue;
    for (auto& ch : line)
      if (ch == ',') ch = ' ';
    std::istringstream ss(line);
    std::int64_t id = 0;
    std::string fields[5];
    if (!(ss >> id >> fields[0] >> fields[1] >> fields[2] >> fields[3] >> fields[4]))
      throw MeshLoadError(path.string() + ":" + std::to_string(lineno) + ": expected 6 columns");
    double vals[5];
    for (int k = 0; k < 5; ++k) {
      try {
        vals[k] = std::stod(fields[k]);
      } catch (const std::exception&) {
        throw MeshLoadError(path.string() + ":" + std::to_string(lineno) + ": bad number '" + fields[k] + "'");
      }
    }
    auto it = index.find(id);
    if (it == index.end())
      throw MeshLoadError(path.string() + ":" + std::to_string(lineno) + ": unknown element " + std::to_string(id));
    if (seen[it->second]) throw MeshLoadError(path.string() + ": element " + std::to_string(id) + " listed twice");
    seen[it->second] = true;
    Material m = Material::from_velocities(vals[0], vals[1], vals[2], vals[3], vals[4]);
    m.validate();
    mats[it->second] = m;
  }
  for (std::size_t e = 0; e < seen.size(); ++e)
    if (!seen[e]) throw MeshLoadError(path.string() + ": no material for element " + std::to_string(mesh.element_tags[e]));
  return mats;
}

void write_materials(const std::filesystem::path& path, const TetMesh& mesh, const std::vector<Material>& mats) {
  std::ofstream out(path);
  if (!out) throw MeshLoadError("cannot write material file " + path.string());
  out << std::setprecision(17) << "elem_id,rho,vp,vs,qp,qs\n";
  for (std::size_t e = 0; e < mats.size(); ++e) {
    const Material& m = mats[e];
    out << mesh.element_tags[e] << ',' << m.rho << ',' << m.vp() << ',' << m.vs() << ',' << m.qp << ',' << m.qs << '\n';
  }
}

}  // namespace aderlts
