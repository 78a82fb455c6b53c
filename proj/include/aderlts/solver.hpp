#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "aderlts/basis.hpp"
#include "aderlts/kernels.hpp"
#include "aderlts/lts.hpp"
#include "aderlts/partition_comm.hpp"
#include "aderlts/source_receiver.hpp"

namespace aderlts {

/// Elastic state (sxx, syy, szz, sxy, syz, sxz, u, v, w) at a point for one
/// fused slot.
using FieldFunction = std::function<std::array<double, 9>(const Vec3& x, int slot)>;

struct SolverOptions {
  int order = 4;
  int width = 1;
  KernelPath path = KernelPath::kAuto;
  RelaxationSet relax;                 // frequencies only; empty for elastic runs
  double t_end = 0.0;
  double receiver_interval = 0.0;      // <= 0 disables sampling
  std::vector<PointSource> sources;    // indexed by LocatedPoint::index
};

/// Element data shared by the LTS and GTS steppers: operators, state,
/// projected sources and bound receivers over a set of elements of which the
/// first `num_local` are updated.
template <typename Real>
class ElementSystem {
 public:
  ElementSystem(const std::vector<ElementGeometry>& geometry, const FaceAdjacency& adjacency,
                const std::vector<Material>& mats, std::int64_t num_local, const ReferenceMatrices& ref,
                const SolverOptions& opt);

  const KernelSet<Real>& kernels() const { return kernels_; }
  std::int64_t num_local() const { return num_local_; }
  std::span<Real> state(std::int64_t k);
  std::span<const Real> state(std::int64_t k) const;

  /// L2 projection of an initial condition; memory variables start at zero.
  void project(const FieldFunction& f);
  /// Sum over owned elements of the squared L2 error of rows
  /// [first, first + rows) against `exact` for one slot.
  double squared_error(const FieldFunction& exact, int first, int rows, int slot) const;
  /// Elastic energy of one slot: kinetic plus strain energy.
  double energy(int slot) const;

  void add_receiver(std::int64_t index, const std::string& name, const Vec3& location, std::int64_t element);
  void add_source(const PointSource& src, std::int64_t element);

  /// Samples every receiver of element k whose sample time lies in [t0, t1)
  /// from the predictor derivatives expanded at t0.
  void sample_step(std::int64_t k, double t0, double t1, std::span<const Real> derivs);
  /// Samples at or after `t_end` from the current state.
  void sample_final(double t_end);
  void inject(std::int64_t k, double t0, double t1);

  /// Seismograms by receiver index, one entry per fused slot.
  const std::map<std::int64_t, std::vector<Seismogram>>& seismograms() const { return seis_; }

 protected:
  struct BoundReceiver {
    std::int64_t index;
    Receiver receiver;
  };

  const ReferenceMatrices& ref_;
  SolverOptions opt_;
  KernelSet<Real> kernels_;
  std::int64_t num_local_;
  std::vector<ElementGeometry> geometry_;
  std::vector<Material> mats_;
  std::vector<KernelElementOps<Real>> ops_;
  std::vector<Real> q_;
  std::int64_t samples_ = 0;
  std::vector<std::vector<BoundReceiver>> receivers_of_;  // per owned element
  std::vector<std::vector<ProjectedSource>> sources_of_;
  std::map<std::int64_t, std::vector<Seismogram>> seis_;
};

/// One partition of an LTS run. Owned elements are predicted and corrected
/// cluster-wise in the order chosen by the cluster scheduler; face
/// contributions of remote neighbours arrive as compressed payloads through
/// the transport.
template <typename Real>
class PartitionSolver : public ElementSystem<Real> {
 public:
  PartitionSolver(const PartitionData& data, const ReferenceMatrices& ref, const SolverOptions& opt,
                  const TimeGrid& grid, Transport* transport);

  /// Drains the transport and runs up to `max_actions` scheduler actions.
  /// Returns the number of actions executed.
  int advance(int max_actions);
  bool done() const { return scheduler_.done(); }
  /// Describes the first correction still waiting on remote payloads.
  std::string blocked_reason() const;
  /// Takes the samples that fall on t_end; call once after done().
  void finish();

  std::int64_t element_updates() const { return updates_; }
  const std::vector<std::int64_t>& cluster_steps() const { return cluster_steps_; }
  std::int64_t corrected_tick(int level) const { return scheduler_.corrected_tick(level); }
  const PartitionData& data() const { return data_; }
  /// Completed actions in execution order, e.g. "P1@0".
  const std::vector<std::string>& trace() const { return trace_; }
  void keep_trace(bool on) { keep_trace_ = on; }

 private:
  using Key = std::tuple<std::int64_t, int, std::int64_t>;  // local element, face, tick

  void receive();
  bool ready(const ClusterAction& a) const;
  void predict(const ClusterAction& a);
  void correct(const ClusterAction& a);
  void emit(std::int64_t k, int level, std::int64_t tick, std::int64_t step);
  void send(const CommRecord& c, std::int64_t tick, int level, std::span<const Real> buffer);
  /// Exchange buffer of owned neighbour `nb` as seen by an element of level
  /// `level` correcting [tick, tick + 2^level).
  std::span<const Real> neighbour_buffer(std::int64_t nb, int level, std::int64_t tick);

  PartitionData data_;
  TimeGrid grid_;
  Transport* transport_;
  ClusterScheduler scheduler_;
  std::vector<std::vector<std::int64_t>> members_;  // owned elements per level
  std::vector<std::int64_t> remote_faces_;          // per level
  std::vector<std::vector<int>> comm_of_;           // comm record ids per owned element
  std::unordered_map<std::int64_t, std::int64_t> local_of_global_;
  std::vector<std::uint8_t> needs_b2_, needs_b3_;
  std::vector<Real> b1_, b2_, b3_, diff_;
  std::map<Key, std::vector<Real>> mailbox_;
  std::map<std::pair<int, std::int64_t>, std::int64_t> arrived_;  // (level, tick) -> payload count
  std::vector<Real> derivs_, tint_, update_, payload_;
  std::int64_t updates_ = 0;
  std::vector<std::int64_t> cluster_steps_;
  std::vector<std::string> trace_;
  bool keep_trace_ = false;
};

/// Global time stepping with one step size for every element; the last step
/// is shortened to land on t_end.
template <typename Real>
class GtsSolver : public ElementSystem<Real> {
 public:
  GtsSolver(const TetMesh& mesh, const FaceAdjacency& adjacency, const std::vector<Material>& mats,
            const ReferenceMatrices& ref, const SolverOptions& opt, double dt);

  /// One global step; returns false once t_end has been reached.
  bool advance();
  void finish();
  double time() const { return grid_.time(step_); }
  std::int64_t steps() const { return step_; }
  std::int64_t total_steps() const { return grid_.end_tick(); }
  std::int64_t element_updates() const { return step_ * this->num_local_; }

 private:
  FaceAdjacency adjacency_;
  TimeGrid grid_;
  std::int64_t step_ = 0;
  std::vector<Real> derivs_, b1_, tint_, update_, payload_;
};

struct RunStats {
  std::int64_t lts_updates = 0;
  std::int64_t gts_updates = 0;      // K * ceil(t_end / dt_min)
  double realized_speedup = 1.0;
  std::vector<std::int64_t> cluster_steps;
  std::int64_t messages = 0;
  double wall_seconds = 0.0;
};

struct LtsRunResult {
  RunStats stats;
  /// Seismograms by receiver index, one per fused slot.
  std::map<std::int64_t, std::vector<Seismogram>> seismograms;
  /// Per slot, squared L2 error summed over partitions (when `exact` given).
  std::vector<double> squared_error;
};

struct LtsRunOptions {
  bool threaded = false;
  const FieldFunction* initial = nullptr;
  const FieldFunction* exact = nullptr;  // evaluated at t_end
  int error_first_row = 0;
  int error_rows = 9;
};

/// Time grid shared by every partition: one tick is lambda * dt_min and a
/// macro step spans the coarsest populated cluster.
TimeGrid lts_time_grid(const std::vector<PartitionData>& parts, double t_end);

/// Runs every partition to t_end over a loopback transport, cooperatively
/// or with one thread per partition. Throws ProtocolError when payloads are
/// missing and SchedulingError when no partition can make progress.
template <typename Real>
LtsRunResult run_lts(const std::vector<PartitionData>& parts, const ReferenceMatrices& ref, const SolverOptions& opt,
                     const LtsRunOptions& run = {});

extern template class ElementSystem<float>;
extern template class ElementSystem<double>;
extern template class PartitionSolver<float>;
extern template class PartitionSolver<double>;
extern template class GtsSolver<float>;
extern template class GtsSolver<double>;

}  // namespace aderlts
