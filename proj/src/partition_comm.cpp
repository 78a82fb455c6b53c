#include "aderlts/partition_comm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <unordered_map>

namespace aderlts {

DualGraph build_dual_graph(const FaceAdjacency& adjacency, const Clustering& c, int face_modes) {
  const auto n = static_cast<std::int64_t>(adjacency.size());
  if (static_cast<std::int64_t>(c.cluster.size()) != n) throw ParameterError("clustering and mesh differ in size");
  DualGraph g;
  g.vertex_weight.resize(n);
  g.offsets.assign(1, 0);
  const std::int64_t payload = 9LL * face_modes;
  for (std::int64_t k = 0; k < n; ++k) {
    g.vertex_weight[k] = std::int64_t{1} << (c.nc - c.cluster[k]);
    for (const FaceLink& l : adjacency[k]) {
      if (!l.interior() || l.neighbor == k) continue;
      const int lo = std::min(c.cluster[k], c.cluster[l.neighbor]);
      g.neighbors.push_back(l.neighbor);
      g.edge_weight.push_back((std::int64_t{1} << (c.nc - lo)) * payload);
    }
    g.offsets.push_back(static_cast<std::int64_t>(g.neighbors.size()));
  }
  return g;
}

namespace {

// Last vertex reached by a BFS over unassigned vertices, starting from the
// lowest-id unassigned one; -1 when everything is assigned.
std::int64_t pseudo_peripheral(const DualGraph& g, const std::vector<int>& part) {
  std::int64_t start = -1;
  for (std::int64_t v = 0; v < g.size(); ++v)
    if (part[v] < 0) {
      start = v;
      break;
    }
  if (start < 0) return -1;
  for (int sweep = 0; sweep < 2; ++sweep) {
    std::vector<char> seen(g.size(), 0);
    std::queue<std::int64_t> q;
    q.push(start);
    seen[start] = 1;
    std::int64_t last = start;
    while (!q.empty()) {
      last = q.front();
      q.pop();
      for (auto e = g.offsets[last]; e < g.offsets[last + 1]; ++e) {
        const auto u = g.neighbors[e];
        if (part[u] < 0 && !seen[u]) {
          seen[u] = 1;
          q.push(u);
        }
      }
    }
    start = last;
  }
  return start;
}

}  // namespace

std::vector<int> partition_graph(const DualGraph& g, int parts) {
  const std::int64_t n = g.size();
  if (parts < 1) throw ParameterError("partition count must be >= 1");
  if (parts > n) throw ParameterError("more partitions than elements");
  std::vector<int> part(n, -1);
  if (parts == 1) {
    std::fill(part.begin(), part.end(), 0);
    return part;
  }
  double remaining = 0.0;
  for (auto w : g.vertex_weight) remaining += static_cast<double>(w);
  std::int64_t unassigned = n;

  for (int p = 0; p < parts; ++p) {
    if (p == parts - 1) {
      for (auto& v : part)
        if (v < 0) v = p;
      break;
    }
    const double target = remaining / (parts - p);
    double grown = 0.0;
    // Frontier ordered by connection weight into the growing part, then id.
    std::map<std::int64_t, std::int64_t> gain;
    std::set<std::pair<std::int64_t, std::int64_t>> frontier;
    auto add_vertex = [&](std::int64_t v) {
      if (gain.count(v)) {
        frontier.erase({-gain[v], v});
        gain.erase(v);
      }
      part[v] = p;
      grown += static_cast<double>(g.vertex_weight[v]);
      --unassigned;
      for (auto e = g.offsets[v]; e < g.offsets[v + 1]; ++e) {
        const auto u = g.neighbors[e];
        if (part[u] >= 0) continue;
        auto& gu = gain[u];
        frontier.erase({-gu, u});
        gu += g.edge_weight[e];
        frontier.insert({-gu, u});
      }
    };
    while (unassigned > parts - p - 1) {
      std::int64_t v;
      if (frontier.empty()) {
        v = pseudo_peripheral(g, part);
        if (v < 0) break;
      } else {
        v = frontier.begin()->second;
      }
      const double w = static_cast<double>(g.vertex_weight[v]);
      if (grown > 0.0 && grown + w - target > target - grown) break;
      add_vertex(v);
      if (grown >= target) break;
    }
    remaining -= grown;
  }

  // Boundary refinement: move vertices off overloaded parts, cut-reducing
  // moves first.
  std::vector<double> load(parts, 0.0);
  std::vector<std::int64_t> count(parts, 0);
  for (std::int64_t v = 0; v < n; ++v) {
    load[part[v]] += static_cast<double>(g.vertex_weight[v]);
    ++count[part[v]];
  }
  const double mean = std::accumulate(load.begin(), load.end(), 0.0) / parts;
  for (int pass = 0; pass < 40; ++pass) {
    const bool allow_cut_growth = pass >= 10;
    bool moved = false;
    for (std::int64_t v = 0; v < n; ++v) {
      const int a = part[v];
      if (load[a] <= mean * 1.01 || count[a] <= 1) continue;
      std::map<int, std::int64_t> link;
      for (auto e = g.offsets[v]; e < g.offsets[v + 1]; ++e) link[part[g.neighbors[e]]] += g.edge_weight[e];
      const double w = static_cast<double>(g.vertex_weight[v]);
      int best = -1;
      std::int64_t best_gain = 0;
      for (const auto& [b, wb] : link) {
        if (b == a || load[b] + w >= load[a]) continue;
        const std::int64_t gain = wb - link[a];
        if (gain < 0 && !allow_cut_growth) continue;
        if (best < 0 || gain > best_gain || (gain == best_gain && load[b] < load[best])) {
          best = b;
          best_gain = gain;
        }
      }
      if (best < 0) continue;
      part[v] = best;
      load[a] -= w;
      load[best] += w;
      --count[a];
      ++count[best];
      moved = true;
    }
    if (!moved && allow_cut_growth) break;
    if (!moved) pass = std::max(pass, 9);
  }
  return part;
}

PartitionStats partition_stats(const DualGraph& g, const std::vector<int>& part, const Clustering& c, int parts) {
  PartitionStats s;
  s.weight.assign(parts, 0);
  s.cluster_count.assign(parts, std::vector<std::int64_t>(c.nc, 0));
  std::vector<std::int64_t> count(parts, 0);
  for (std::int64_t v = 0; v < g.size(); ++v) {
    s.weight[part[v]] += g.vertex_weight[v];
    ++s.cluster_count[part[v]][c.cluster[v] - 1];
    ++count[part[v]];
    for (auto e = g.offsets[v]; e < g.offsets[v + 1]; ++e)
      if (part[g.neighbors[e]] != part[v] && g.neighbors[e] > v) {
        ++s.cut_faces;
        s.cut_weight += g.edge_weight[e];
      }
  }
  const double total = static_cast<double>(std::accumulate(s.weight.begin(), s.weight.end(), std::int64_t{0}));
  s.weight_imbalance = static_cast<double>(*std::max_element(s.weight.begin(), s.weight.end())) / (total / parts);
  s.element_imbalance = static_cast<double>(*std::max_element(count.begin(), count.end())) /
                        static_cast<double>(std::max<std::int64_t>(1, *std::min_element(count.begin(), count.end())));
  return s;
}

std::vector<std::uint8_t> communication_roles(const FaceAdjacency& adjacency, const std::vector<int>& part) {
  std::vector<std::uint8_t> role(adjacency.size(), 0);
  for (std::size_t k = 0; k < adjacency.size(); ++k)
    for (const FaceLink& l : adjacency[k])
      if (l.interior() && part[l.neighbor] != part[k]) role[k] = 1;
  return role;
}

std::vector<std::int64_t> reorder(const Clustering& c, const std::vector<int>& part,
                                  const std::vector<std::uint8_t>& role) {
  std::vector<std::int64_t> order(part.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
    return std::make_tuple(part[a], c.cluster[a], role[a], a) < std::make_tuple(part[b], c.cluster[b], role[b], b);
  });
  return order;
}

std::vector<ElementGeometry> PartitionData::geometry() const {
  TetMesh m;
  for (const auto& v : vertices) {
    const auto base = static_cast<std::int64_t>(m.vertices.size());
    m.vertices.insert(m.vertices.end(), v.begin(), v.end());
    m.elements.push_back({base, base + 1, base + 2, base + 3});
  }
  return compute_geometry(m);
}

std::vector<PartitionData> build_partitions(const TetMesh& mesh, const FaceAdjacency& adjacency,
                                            const std::vector<Material>& mats, const Clustering& c,
                                            const std::vector<int>& part, int parts,
                                            const std::vector<LocatedPoint>& receivers,
                                            const std::vector<LocatedPoint>& sources) {
  const auto role = communication_roles(adjacency, part);
  const auto order = reorder(c, part, role);
  std::vector<PartitionData> out(parts);
  std::vector<std::int64_t> local_of(mesh.elements.size(), -1);
  for (int p = 0; p < parts; ++p) {
    out[p].partition = static_cast<std::uint32_t>(p);
    out[p].num_partitions = static_cast<std::uint32_t>(parts);
    out[p].nc = c.nc;
    out[p].lambda = c.lambda;
    out[p].dt_min = c.dt_min;
  }
  auto push_entry = [&](PartitionData& d, std::int64_t g) {
    d.global_id.push_back(g);
    std::array<Vec3, 4> v;
    for (int i = 0; i < 4; ++i) v[i] = mesh.vertices[mesh.elements[g][i]];
    d.vertices.push_back(v);
    d.materials.push_back(mats[g]);
    d.cluster.push_back(c.cluster[g]);
    d.owner.push_back(part[g]);
    d.role.push_back(role[g]);
    d.adjacency.emplace_back();
  };
  for (std::int64_t g : order) {
    PartitionData& d = out[part[g]];
    local_of[g] = static_cast<std::int64_t>(d.global_id.size());
    push_entry(d, g);
  }
  for (auto& d : out) {
    d.num_local = static_cast<std::int64_t>(d.global_id.size());
    if (d.num_local == 0) throw ParameterError("partition " + std::to_string(d.partition) + " is empty");
    std::unordered_map<std::int64_t, std::int64_t> ghost_of;
    for (std::int64_t k = 0; k < d.num_local; ++k) {
      const std::int64_t g = d.global_id[k];
      for (int i = 0; i < 4; ++i) {
        FaceLink l = adjacency[g][i];
        if (l.interior()) {
          const std::int64_t nb = l.neighbor;
          if (part[nb] == static_cast<int>(d.partition)) {
            l.neighbor = local_of[nb];
          } else {
            auto it = ghost_of.find(nb);
            if (it == ghost_of.end()) {
              it = ghost_of.emplace(nb, static_cast<std::int64_t>(d.global_id.size())).first;
              push_entry(d, nb);
            }
            l.neighbor = it->second;
            d.comm.push_back({k, i, nb, l.neighbor_face, l.orientation, part[nb], c.cluster[nb]});
          }
        }
        d.adjacency[k][i] = l;
      }
    }
  }
  auto assign_points = [&](const std::vector<LocatedPoint>& pts, bool is_source) {
    for (const auto& pt : pts) {
      if (pt.global_element < 0 || pt.global_element >= mesh.num_elements())
        throw ConfigError("point " + pt.name + " has no owning element");
      PartitionData& d = out[part[pt.global_element]];
      LocatedPoint lp = pt;
      lp.local = local_of[pt.global_element];
      (is_source ? d.sources : d.receivers).push_back(lp);
    }
  };
  assign_points(receivers, false);
  assign_points(sources, true);
  return out;
}

namespace {

constexpr char kMagic[8] = {'A', 'D', 'L', 'T', 'P', 'A', 'R', 'T'};

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}
  template <typename T>
  void put(T v) {
    os_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void put_string(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    os_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

 private:
  std::ostream& os_;
};

class Reader {
 public:
  Reader(std::istream& is, std::string name) : is_(is), name_(std::move(name)) {}
  template <typename T>
  T get() {
    T v;
    is_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is_) throw MeshLoadError("truncated partition file " + name_);
    return v;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    if (n > (1u << 20)) throw MeshLoadError("corrupt string in partition file " + name_);
    std::string s(n, '\0');
    is_.read(s.data(), n);
    if (!is_) throw MeshLoadError("truncated partition file " + name_);
    return s;
  }

 private:
  std::istream& is_;
  std::string name_;
};

void write_points(Writer& w, const std::vector<LocatedPoint>& pts) {
  for (const auto& p : pts) {
    w.put(p.index);
    w.put_string(p.name);
    for (double x : p.location) w.put(x);
    w.put(p.global_element);
    w.put(p.local);
  }
}

std::vector<LocatedPoint> read_points(Reader& r, std::int64_t n) {
  std::vector<LocatedPoint> pts(n);
  for (auto& p : pts) {
    p.index = r.get<std::int64_t>();
    p.name = r.get_string();
    for (double& x : p.location) x = r.get<double>();
    p.global_element = r.get<std::int64_t>();
    p.local = r.get<std::int64_t>();
  }
  return pts;
}

}  // namespace

void write_partition(const std::filesystem::path& path, const PartitionData& p) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path.string());
  Writer w(os);
  os.write(kMagic, sizeof(kMagic));
  w.put(kPartitionFormatVersion);
  w.put(p.partition);
  w.put(p.num_partitions);
  w.put<std::int32_t>(p.nc);
  w.put(p.lambda);
  w.put(p.dt_min);
  w.put(p.num_local);
  w.put<std::int64_t>(static_cast<std::int64_t>(p.global_id.size()));
  w.put<std::int64_t>(static_cast<std::int64_t>(p.comm.size()));
  w.put<std::int64_t>(static_cast<std::int64_t>(p.receivers.size()));
  w.put<std::int64_t>(static_cast<std::int64_t>(p.sources.size()));
  for (std::size_t k = 0; k < p.global_id.size(); ++k) {
    w.put(p.global_id[k]);
    w.put<std::int32_t>(p.cluster[k]);
    w.put<std::int32_t>(p.owner[k]);
    w.put(p.role[k]);
    for (const auto& v : p.vertices[k])
      for (double x : v) w.put(x);
    const Material& m = p.materials[k];
    for (double x : {m.rho, m.lam, m.mu, m.qp, m.qs}) w.put(x);
    for (const FaceLink& l : p.adjacency[k]) {
      w.put(l.neighbor);
      w.put<std::int32_t>(l.neighbor_face);
      w.put<std::int32_t>(l.orientation);
      w.put(static_cast<std::uint8_t>(l.boundary));
    }
  }
  for (const auto& c : p.comm) {
    w.put(c.local);
    w.put<std::int32_t>(c.face);
    w.put(c.remote_global);
    w.put<std::int32_t>(c.remote_face);
    w.put<std::int32_t>(c.orientation);
    w.put<std::int32_t>(c.remote_partition);
    w.put<std::int32_t>(c.remote_cluster);
  }
  write_points(w, p.receivers);
  write_points(w, p.sources);
  if (!os) throw ConfigError("failed writing " + path.string());
}

PartitionData read_partition(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MeshLoadError("cannot read partition file " + path.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw MeshLoadError(path.string() + " is not a partition file");
  Reader r(is, path.string());
  const auto version = r.get<std::uint32_t>();
  if (version != kPartitionFormatVersion)
    throw VersionError("partition file version " + std::to_string(version) + " is not supported");
  PartitionData p;
  p.partition = r.get<std::uint32_t>();
  p.num_partitions = r.get<std::uint32_t>();
  p.nc = r.get<std::int32_t>();
  p.lambda = r.get<double>();
  p.dt_min = r.get<double>();
  p.num_local = r.get<std::int64_t>();
  const auto entries = r.get<std::int64_t>();
  const auto comm = r.get<std::int64_t>();
  const auto receivers = r.get<std::int64_t>();
  const auto sources = r.get<std::int64_t>();
  if (entries < p.num_local || entries > (std::int64_t{1} << 40) || comm < 0 || receivers < 0 || sources < 0)
    throw MeshLoadError("corrupt header in " + path.string());
  for (std::int64_t k = 0; k < entries; ++k) {
    p.global_id.push_back(r.get<std::int64_t>());
    p.cluster.push_back(r.get<std::int32_t>());
    p.owner.push_back(r.get<std::int32_t>());
    p.role.push_back(r.get<std::uint8_t>());
    std::array<Vec3, 4> v;
    for (auto& x : v)
      for (double& c : x) c = r.get<double>();
    p.vertices.push_back(v);
    Material m;
    m.rho = r.get<double>();
    m.lam = r.get<double>();
    m.mu = r.get<double>();
    m.qp = r.get<double>();
    m.qs = r.get<double>();
    p.materials.push_back(m);
    std::array<FaceLink, 4> links;
    for (FaceLink& l : links) {
      l.neighbor = r.get<std::int64_t>();
      l.neighbor_face = r.get<std::int32_t>();
      l.orientation = r.get<std::int32_t>();
      l.boundary = static_cast<BoundaryKind>(r.get<std::uint8_t>());
    }
    p.adjacency.push_back(links);
  }
  for (std::int64_t i = 0; i < comm; ++i) {
    CommRecord c;
    c.local = r.get<std::int64_t>();
    c.face = r.get<std::int32_t>();
    c.remote_global = r.get<std::int64_t>();
    c.remote_face = r.get<std::int32_t>();
    c.orientation = r.get<std::int32_t>();
    c.remote_partition = r.get<std::int32_t>();
    c.remote_cluster = r.get<std::int32_t>();
    p.comm.push_back(c);
  }
  p.receivers = read_points(r, receivers);
  p.sources = read_points(r, sources);
  return p;
}

template <typename Real>
std::vector<std::byte> encode_payload(const PayloadHeader& h, std::span<const Real> values) {
  PayloadHeader hh = h;
  hh.count = static_cast<std::int32_t>(values.size());
  hh.precision = sizeof(Real);
  std::vector<std::byte> out(sizeof(PayloadHeader) + values.size_bytes());
  std::memcpy(out.data(), &hh, sizeof(PayloadHeader));
  std::memcpy(out.data() + sizeof(PayloadHeader), values.data(), values.size_bytes());
  return out;
}

template <typename Real>
PayloadHeader decode_payload(std::span<const std::byte> msg, std::vector<Real>& values) {
  if (msg.size() < sizeof(PayloadHeader)) throw ProtocolError("truncated payload header");
  PayloadHeader h;
  std::memcpy(&h, msg.data(), sizeof(PayloadHeader));
  if (h.precision != static_cast<std::int32_t>(sizeof(Real)))
    throw ProtocolError("payload precision mismatch for face " + std::to_string(h.dest_face) + " of element " +
                        std::to_string(h.dest_element));
  if (h.count < 0 || msg.size() != sizeof(PayloadHeader) + static_cast<std::size_t>(h.count) * sizeof(Real))
    throw ProtocolError("payload size mismatch for face " + std::to_string(h.dest_face) + " of element " +
                        std::to_string(h.dest_element));
  values.resize(h.count);
  std::memcpy(values.data(), msg.data() + sizeof(PayloadHeader), static_cast<std::size_t>(h.count) * sizeof(Real));
  return h;
}

template std::vector<std::byte> encode_payload<float>(const PayloadHeader&, std::span<const float>);
template std::vector<std::byte> encode_payload<double>(const PayloadHeader&, std::span<const double>);
template PayloadHeader decode_payload<float>(std::span<const std::byte>, std::vector<float>&);
template PayloadHeader decode_payload<double>(std::span<const std::byte>, std::vector<double>&);

LoopbackTransport::LoopbackTransport(int parts) : queues_(parts) {}

void LoopbackTransport::send(int /*from*/, int to, std::vector<std::byte> msg) {
  std::lock_guard<std::mutex> lock(mutex_);
  if (to < 0 || to >= static_cast<int>(queues_.size())) throw ProtocolError("send to unknown partition");
  queues_[to].push_back(std::move(msg));
  ++sent_;
}

std::vector<std::vector<std::byte>> LoopbackTransport::poll(int partition) {
  std::lock_guard<std::mutex> lock(mutex_);
  std::vector<std::vector<std::byte>> out(std::make_move_iterator(queues_[partition].begin()),
                                          std::make_move_iterator(queues_[partition].end()));
  queues_[partition].clear();
  received_ += static_cast<std::int64_t>(out.size());
  return out;
}

std::int64_t LoopbackTransport::sent() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return sent_;
}

std::int64_t LoopbackTransport::received() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return received_;
}

}  // namespace aderlts
