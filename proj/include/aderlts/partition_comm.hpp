#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "aderlts/lts.hpp"
#include "aderlts/material.hpp"
#include "aderlts/mesh.hpp"

namespace aderlts {

/// Elements as vertices, interior faces as edges (CSR, both directions).
struct DualGraph {
  std::vector<std::int64_t> vertex_weight;
  std::vector<std::int64_t> offsets;  // size K + 1
  std::vector<std::int64_t> neighbors;
  std::vector<std::int64_t> edge_weight;

  std::int64_t size() const { return static_cast<std::int64_t>(vertex_weight.size()); }
};

/// Vertex weight 2^(nc - l) for cluster l; edge weight
/// 2^(nc - min(la, lb)) * 9 * face_modes, i.e. exchanges per coarsest step
/// times the payload size.
DualGraph build_dual_graph(const FaceAdjacency& adjacency, const Clustering& c, int face_modes);

/// Greedy graph growing from pseudo-peripheral seeds followed by boundary
/// refinement of the weighted load. Throws ParameterError for p < 1 or p > K.
std::vector<int> partition_graph(const DualGraph& g, int parts);

struct PartitionStats {
  std::vector<std::int64_t> weight;                     // per partition
  std::vector<std::vector<std::int64_t>> cluster_count;  // [partition][cluster - 1]
  std::int64_t cut_faces = 0;
  std::int64_t cut_weight = 0;
  double weight_imbalance = 1.0;   // max / mean
  double element_imbalance = 1.0;  // max / min element count
};

PartitionStats partition_stats(const DualGraph& g, const std::vector<int>& part, const Clustering& c, int parts);

/// Partition, cluster, communication role (0 interior, 1 send) and id of
/// every element; roles mark elements with a face in another partition.
std::vector<std::uint8_t> communication_roles(const FaceAdjacency& adjacency, const std::vector<int>& part);

/// New-to-old permutation sorted by (partition, cluster, role, id).
std::vector<std::int64_t> reorder(const Clustering& c, const std::vector<int>& part,
                                  const std::vector<std::uint8_t>& role);

/// One cross-partition face seen from its owning side.
struct CommRecord {
  std::int64_t local = -1;          // local element index
  int face = -1;                    // local face id
  std::int64_t remote_global = -1;  // neighbour's global element id
  int remote_face = -1;
  int orientation = 0;
  int remote_partition = -1;
  int remote_cluster = 0;
};

/// A point (source or receiver) bound to its owning element.
struct LocatedPoint {
  std::int64_t index = -1;  // position in the configured source/receiver list
  std::string name;
  Vec3 location{};
  std::int64_t global_element = -1;
  std::int64_t local = -1;
};

/// Everything one partition needs to run. Entries [0, num_local) are owned
/// elements in reordered sequence, the rest are ghost copies of remote face
/// neighbours; ghosts carry no adjacency of their own.
struct PartitionData {
  std::uint32_t partition = 0;
  std::uint32_t num_partitions = 1;
  std::int64_t num_local = 0;
  int nc = 1;
  double lambda = 1.0;
  double dt_min = 0.0;
  std::vector<std::int64_t> global_id;
  std::vector<std::array<Vec3, 4>> vertices;
  std::vector<Material> materials;
  std::vector<int> cluster;
  std::vector<int> owner;
  std::vector<std::uint8_t> role;
  FaceAdjacency adjacency;
  std::vector<CommRecord> comm;
  std::vector<LocatedPoint> receivers;
  std::vector<LocatedPoint> sources;

  std::int64_t num_ghosts() const { return static_cast<std::int64_t>(global_id.size()) - num_local; }
  std::vector<ElementGeometry> geometry() const;
};

/// Splits a mesh into partitions. `receivers` and `sources` are located on
/// the full mesh so every partition count picks the same owning element.
std::vector<PartitionData> build_partitions(const TetMesh& mesh, const FaceAdjacency& adjacency,
                                            const std::vector<Material>& mats, const Clustering& c,
                                            const std::vector<int>& part, int parts,
                                            const std::vector<LocatedPoint>& receivers = {},
                                            const std::vector<LocatedPoint>& sources = {});

inline constexpr std::uint32_t kPartitionFormatVersion = 1;

/// Binary partition file; layout documented in docs/partition_format.md.
void write_partition(const std::filesystem::path& path, const PartitionData& p);
PartitionData read_partition(const std::filesystem::path& path);

/// Fixed header in front of every face payload.
struct PayloadHeader {
  std::int64_t dest_element = -1;  // global id of the receiving element
  std::int64_t tick = 0;           // start tick of the receiver's step
  std::int32_t dest_face = -1;
  std::int32_t source_cluster = 0;
  std::int32_t count = 0;          // number of values, 9 * F * W
  std::int32_t precision = 0;      // bytes per value
};

template <typename Real>
std::vector<std::byte> encode_payload(const PayloadHeader& h, std::span<const Real> values);
/// Throws ProtocolError for truncated messages or a precision mismatch.
template <typename Real>
PayloadHeader decode_payload(std::span<const std::byte> msg, std::vector<Real>& values);

/// Message layer between partition workers.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send(int from, int to, std::vector<std::byte> msg) = 0;
  /// All messages delivered to `partition` since the last poll, in send order.
  virtual std::vector<std::vector<std::byte>> poll(int partition) = 0;
};

/// In-process queues; safe for concurrent workers.
class LoopbackTransport : public Transport {
 public:
  explicit LoopbackTransport(int parts);
  void send(int from, int to, std::vector<std::byte> msg) override;
  std::vector<std::vector<std::byte>> poll(int partition) override;
  std::int64_t sent() const;
  std::int64_t received() const;

 private:
  mutable std::mutex mutex_;
  std::vector<std::deque<std::vector<std::byte>>> queues_;
  std::int64_t sent_ = 0;
  std::int64_t received_ = 0;
};

}  // namespace aderlts
