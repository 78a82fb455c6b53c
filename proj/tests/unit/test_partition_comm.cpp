#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "aderlts/basis.hpp"
#include "aderlts/partition_comm.hpp"

using namespace aderlts;

namespace {

DualGraph chain(const std::vector<std::int64_t>& weights) {
  DualGraph g;
  g.vertex_weight = weights;
  g.offsets.assign(1, 0);
  const auto n = static_cast<std::int64_t>(weights.size());
  for (std::int64_t v = 0; v < n; ++v) {
    for (std::int64_t u : {v - 1, v + 1})
      if (u >= 0 && u < n) {
        g.neighbors.push_back(u);
        g.edge_weight.push_back(1);
      }
    g.offsets.push_back(static_cast<std::int64_t>(g.neighbors.size()));
  }
  return g;
}

double imbalance(const DualGraph& g, const std::vector<int>& part, int parts) {
  std::vector<double> load(parts, 0.0);
  for (std::int64_t v = 0; v < g.size(); ++v) load[part[v]] += static_cast<double>(g.vertex_weight[v]);
  const double mean = std::accumulate(load.begin(), load.end(), 0.0) / parts;
  return *std::max_element(load.begin(), load.end()) / mean;
}

struct MeshCase {
  TetMesh mesh;
  FaceAdjacency adj;
  std::vector<Material> mats;
  Clustering clustering;

  explicit MeshCase(const BoxSpec& spec, int nc = 3) {
    mesh = generate_box(spec);
    adj = build_adjacency(mesh);
    const auto geom = compute_geometry(mesh);
    mats.assign(mesh.elements.size(), Material::from_velocities(1.0, 2.0, 1.0));
    clustering = normalize_clusters(assign_clusters(cfl_timesteps(geom, mats, 3), nc, 1.0), adj);
  }
};

BoxSpec graded(int cells_yz) {
  BoxSpec s;
  s.x = {0.0, 0.125, 0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  s.y = uniform_axis(0.0, 1.0, cells_yz);
  s.z = uniform_axis(0.0, 1.0, cells_yz);
  return s;
}

}  // namespace

TEST(DualGraph, WeightsFollowClusters) {
  MeshCase s(graded(2));
  const auto g = build_dual_graph(s.adj, s.clustering, 6);
  const int nc = s.clustering.nc;
  for (std::int64_t v = 0; v < g.size(); ++v) {
    EXPECT_EQ(g.vertex_weight[v], std::int64_t{1} << (nc - s.clustering.cluster[v]));
    for (auto e = g.offsets[v]; e < g.offsets[v + 1]; ++e) {
      const int lo = std::min(s.clustering.cluster[v], s.clustering.cluster[g.neighbors[e]]);
      EXPECT_EQ(g.edge_weight[e], (std::int64_t{1} << (nc - lo)) * 9 * 6);
    }
  }
  // nc = 3: cluster 1 weighs 4, cluster 3 weighs 1.
  Clustering c;
  c.nc = 3;
  c.cluster = {1, 3};
  FaceAdjacency two(2);
  const auto h = build_dual_graph(two, c, 1);
  EXPECT_EQ(h.vertex_weight[0], 4);
  EXPECT_EQ(h.vertex_weight[1], 1);
  c.nc = 1;
  c.cluster = {1, 1};
  const auto flat = build_dual_graph(two, c, 1);
  EXPECT_EQ(flat.vertex_weight[0], flat.vertex_weight[1]);
}

TEST(Partitioner, SinglePartitionAndErrors) {
  const auto g = chain({1, 2, 3});
  const auto part = partition_graph(g, 1);
  EXPECT_EQ(part, std::vector<int>(3, 0));
  Clustering c;
  c.cluster = {1, 1, 1};
  EXPECT_EQ(partition_stats(g, part, c, 1).cut_faces, 0);
  EXPECT_THROW(partition_graph(g, 0), ParameterError);
  EXPECT_THROW(partition_graph(g, 4), ParameterError);
}

TEST(Partitioner, DisconnectedComponentsSplitCleanly) {
  DualGraph g;
  g.vertex_weight = {1, 1, 1, 1, 1, 1};
  // Two triangles {0,1,2} and {3,4,5}.
  const std::vector<std::vector<std::int64_t>> nb{{1, 2}, {0, 2}, {0, 1}, {4, 5}, {3, 5}, {3, 4}};
  g.offsets.assign(1, 0);
  for (const auto& l : nb) {
    for (auto u : l) {
      g.neighbors.push_back(u);
      g.edge_weight.push_back(1);
    }
    g.offsets.push_back(static_cast<std::int64_t>(g.neighbors.size()));
  }
  const auto part = partition_graph(g, 2);
  EXPECT_EQ(part[0], part[1]);
  EXPECT_EQ(part[1], part[2]);
  EXPECT_EQ(part[3], part[4]);
  EXPECT_EQ(part[4], part[5]);
  EXPECT_NE(part[0], part[3]);
}

TEST(Partitioner, WeightedChainMeetsEnumeratedOptimum) {
  const auto g = chain({4, 4, 1, 1});
  // Exhaustive enumeration of all two-way splits gives the best achievable
  // max/mean load.
  double best = 1e9;
  for (int mask = 1; mask < 15; ++mask) {
    std::vector<int> p(4);
    for (int v = 0; v < 4; ++v) p[v] = (mask >> v) & 1;
    best = std::min(best, imbalance(g, p, 2));
  }
  const auto part = partition_graph(g, 2);
  const double got = imbalance(g, part, 2);
  EXPECT_LE(got, best * 1.2);
  EXPECT_LE(got, 1.2);
}

TEST(Partitioner, BalancesWeightedLoadOnTestMeshes) {
  for (int cells : {2, 3}) {
    MeshCase s(graded(cells));
    const auto g = build_dual_graph(s.adj, s.clustering, 6);
    for (int parts : {2, 3, 4}) {
      const auto part = partition_graph(g, parts);
      std::set<int> used(part.begin(), part.end());
      EXPECT_EQ(static_cast<int>(used.size()), parts);
      const auto st = partition_stats(g, part, s.clustering, parts);
      EXPECT_LE(st.weight_imbalance, 1.05) << cells << " cells, " << parts << " parts";
    }
  }
}

TEST(Reorder, BlocksAreContiguousAndPermutationIsBijective) {
  MeshCase s(graded(2), 2);
  ASSERT_GT(s.clustering.counts()[0], 0);
  ASSERT_GT(s.clustering.counts()[1], 0);
  const auto part = partition_graph(build_dual_graph(s.adj, s.clustering, 6), 2);
  const auto role = communication_roles(s.adj, part);
  const auto order = reorder(s.clustering, part, role);
  std::vector<std::int64_t> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) ASSERT_EQ(sorted[i], static_cast<std::int64_t>(i));
  // Each (partition, cluster, role) key occupies one contiguous range.
  std::set<std::tuple<int, int, int>> closed;
  std::tuple<int, int, int> current{-1, -1, -1};
  for (auto g : order) {
    const std::tuple<int, int, int> key{part[g], s.clustering.cluster[g], role[g]};
    if (key != current) {
      EXPECT_FALSE(closed.count(key)) << "block reopened";
      if (std::get<0>(current) >= 0) closed.insert(current);
      current = key;
    }
  }
  // Single partition, single cluster: identity up to role grouping (all interior).
  Clustering one = s.clustering;
  std::fill(one.cluster.begin(), one.cluster.end(), 1);
  std::vector<int> zero(part.size(), 0);
  const auto id = reorder(one, zero, communication_roles(s.adj, zero));
  for (std::size_t i = 0; i < id.size(); ++i) EXPECT_EQ(id[i], static_cast<std::int64_t>(i));
}

TEST(Partitions, CountsMirrorsAndGhosts) {
  MeshCase s(graded(2));
  const int parts = 3;
  const auto part = partition_graph(build_dual_graph(s.adj, s.clustering, 6), parts);
  const auto data = build_partitions(s.mesh, s.adj, s.mats, s.clustering, part, parts);
  std::int64_t total = 0;
  std::set<std::tuple<std::int64_t, int, std::int64_t, int>> faces;
  for (const auto& d : data) {
    total += d.num_local;
    for (std::int64_t k = 0; k < d.num_local; ++k) EXPECT_EQ(d.owner[k], static_cast<int>(d.partition));
    for (std::int64_t k = d.num_local; k < static_cast<std::int64_t>(d.global_id.size()); ++k)
      EXPECT_NE(d.owner[k], static_cast<int>(d.partition));
    for (const auto& c : d.comm) {
      EXPECT_NE(c.remote_partition, static_cast<int>(d.partition));
      EXPECT_EQ(c.remote_cluster, s.clustering.cluster[c.remote_global]);
      const auto g = d.global_id[c.local];
      EXPECT_EQ(s.adj[g][c.face].neighbor, c.remote_global);
      faces.insert({g, c.face, c.remote_global, c.remote_face});
    }
  }
  EXPECT_EQ(total, s.mesh.num_elements());
  // Every cross-partition face is seen from both sides.
  for (const auto& [a, fa, b, fb] : faces) EXPECT_TRUE(faces.count({b, fb, a, fa}));
  EXPECT_FALSE(faces.empty());
}

TEST(Partitions, FileRoundTripAndVersionCheck) {
  MeshCase s(graded(2));
  const auto part = partition_graph(build_dual_graph(s.adj, s.clustering, 6), 2);
  std::vector<LocatedPoint> rec{{0, "r0", {0.1, 0.5, 0.5}, 3, -1}};
  std::vector<LocatedPoint> src{{0, "s0", {0.2, 0.5, 0.5}, 5, -1}};
  const auto data = build_partitions(s.mesh, s.adj, s.mats, s.clustering, part, 2, rec, src);
  const auto dir = std::filesystem::temp_directory_path() / "aderlts_part_test";
  std::filesystem::create_directories(dir);
  for (const auto& d : data) {
    const auto path = dir / ("p" + std::to_string(d.partition) + ".bin");
    write_partition(path, d);
    const auto back = read_partition(path);
    EXPECT_EQ(back.partition, d.partition);
    EXPECT_EQ(back.num_local, d.num_local);
    EXPECT_EQ(back.global_id, d.global_id);
    EXPECT_EQ(back.cluster, d.cluster);
    EXPECT_EQ(back.dt_min, d.dt_min);
    EXPECT_EQ(back.comm.size(), d.comm.size());
    EXPECT_EQ(back.receivers.size(), d.receivers.size());
    EXPECT_EQ(back.sources.size(), d.sources.size());
    for (std::size_t i = 0; i < d.receivers.size(); ++i) EXPECT_EQ(back.receivers[i].local, d.receivers[i].local);
    for (std::size_t k = 0; k < d.global_id.size(); ++k) {
      EXPECT_EQ(back.vertices[k], d.vertices[k]);
      EXPECT_EQ(back.materials[k].mu, d.materials[k].mu);
      for (int i = 0; i < 4; ++i) EXPECT_EQ(back.adjacency[k][i].neighbor, d.adjacency[k][i].neighbor);
    }
  }
  // Bump the version field right after the magic.
  const auto path = dir / "p0.bin";
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8);
    const std::uint32_t bad = kPartitionFormatVersion + 1;
    f.write(reinterpret_cast<const char*>(&bad), sizeof(bad));
  }
  EXPECT_THROW(read_partition(path), VersionError);
  std::filesystem::remove_all(dir);
}

TEST(Payloads, SizeAndRoundTrip) {
  EXPECT_EQ(9 * basis_counts(5).nb2d, 135);
  EXPECT_EQ(9 * basis_counts(5).nb3d, 315);
  EXPECT_EQ(9 * basis_counts(1).nb2d, 9);
  std::vector<float> values(135);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<float>(i) * 0.37f - 3.0f;
  PayloadHeader h;
  h.dest_element = 42;
  h.tick = 7;
  h.dest_face = 2;
  h.source_cluster = 1;
  h.count = 135;
  h.precision = 4;
  const auto msg = encode_payload<float>(h, values);
  std::vector<float> back;
  const auto hb = decode_payload<float>(msg, back);
  EXPECT_EQ(back, values);
  EXPECT_EQ(hb.dest_element, 42);
  EXPECT_EQ(hb.tick, 7);
  EXPECT_EQ(hb.dest_face, 2);
  std::vector<double> wrong;
  EXPECT_THROW(decode_payload<double>(msg, wrong), ProtocolError);
  EXPECT_THROW(decode_payload<float>(std::span(msg).first(msg.size() - 1), back), ProtocolError);
}

TEST(Transport, LoopbackDeliversInOrder) {
  LoopbackTransport t(2);
  for (int i = 0; i < 5; ++i) t.send(0, 1, {std::byte(i)});
  t.send(1, 0, {std::byte(9)});
  const auto got = t.poll(1);
  ASSERT_EQ(got.size(), 5u);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(got[i][0], std::byte(i));
  EXPECT_TRUE(t.poll(1).empty());
  EXPECT_EQ(t.poll(0).size(), 1u);
  EXPECT_EQ(t.sent(), t.received());
}
