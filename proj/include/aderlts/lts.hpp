#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aderlts/material.hpp"
#include "aderlts/mesh.hpp"

namespace aderlts {

struct TimestepSet {
  std::vector<double> dt;  // per element CFL step (s)
  double dt_min = 0.0;
};

/// Safety factor of the CFL step. Measured limit of the scheme on Kuhn
/// meshes is about 0.5 for orders 1..5; 0.45 leaves a margin.
inline constexpr double kDefaultCfl = 0.45;

/// dt_k = cfl * insphere_diameter / ((2O - 1) * vp).
TimestepSet cfl_timesteps(const std::vector<ElementGeometry>& geometry, const std::vector<Material>& mats, int order,
                          double cfl = kDefaultCfl);

/// Rate-2 time clusters. Cluster ids are 1-based: cluster l steps with
/// 2^(l-1) * lambda * dt_min, and cluster nc is open-ended.
struct Clustering {
  int nc = 1;
  double lambda = 1.0;
  double dt_min = 0.0;
  std::vector<int> cluster;

  double cluster_dt(int l) const;
  std::vector<std::int64_t> counts() const;  // index l-1
};

Clustering assign_clusters(const TimestepSet& ts, int nc, double lambda);

/// Lowers cluster ids until face neighbours differ by at most one. Returns
/// the greatest fixed point below the input assignment.
Clustering normalize_clusters(const Clustering& c, const FaceAdjacency& adjacency);

/// GTS/LTS element-update ratio per unit simulated time.
double theoretical_speedup(const Clustering& c);

struct LambdaChoice {
  double lambda = 1.0;
  Clustering clustering;
  double speedup = 1.0;
};

/// Tests lambda in {0.51, 0.52, ..., 1.00}; ties go to the larger lambda.
LambdaChoice optimize_lambda(const TimestepSet& ts, const FaceAdjacency& adjacency, int nc);

/// Writes the per-cluster CSV report (cluster, lower/upper bound relative to
/// dt_min, step, element count, load share) plus lambda and speedup lines.
void write_clustering_report(const std::string& path, const Clustering& c, const TimestepSet& ts,
                             std::int64_t elements_lowered);

/// Maps integer ticks to simulated time. One tick is lambda * dt_min; the
/// last macro step (the coarsest cluster step) is shrunk uniformly so the
/// final tick lands exactly on t_end.
struct TimeGrid {
  double tick_dt = 0.0;
  std::int64_t macro_ticks = 1;
  std::int64_t macros = 0;
  double last_tick_dt = 0.0;

  static TimeGrid build(double tick_dt, std::int64_t macro_ticks, double t_end);
  std::int64_t end_tick() const { return macro_ticks * macros; }
  double time(std::int64_t tick) const;
  /// Length in seconds of [tick, tick + len], which never straddles a macro step.
  double step(std::int64_t tick, std::int64_t len) const;
};

struct ClusterAction {
  enum class Kind { kPredict, kCorrect };
  Kind kind = Kind::kPredict;
  int cluster = 0;           // 0-based level
  std::int64_t tick = 0;     // start of the step
  std::int64_t length = 1;   // ticks
  std::int64_t step = 0;     // n_k of the step (0-based)

  std::string describe() const;
};

/// Dependency-respecting order of predictions and corrections for rate-2
/// clusters. Level l steps 2^l ticks. Adjacent levels are coupled through
/// the B1/B2/B3 exchange buffers; `adjacent[a][b]` says whether levels a and
/// b share a face.
class ClusterScheduler {
 public:
  ClusterScheduler(std::vector<bool> populated, std::vector<std::vector<bool>> adjacent, std::int64_t end_tick);

  /// Next eligible action; `ready` may veto corrections whose remote
  /// payloads have not arrived. Empty when finished or blocked.
  std::optional<ClusterAction> next(const std::function<bool(const ClusterAction&)>& ready = {}) const;
  void complete(const ClusterAction& action);
  bool done() const;
  /// Throws SchedulingError when nothing is eligible but work remains.
  ClusterAction next_or_throw(const std::function<bool(const ClusterAction&)>& ready = {}) const;

  std::int64_t length(int level) const { return std::int64_t{1} << level; }
  std::int64_t corrected_tick(int level) const { return state_[level].tick; }

 private:
  struct State {
    std::int64_t tick = 0;        // corrected time
    bool predicted = false;       // predicted at `tick`, correction pending
    std::int64_t pred_tick = -1;  // tick of the last prediction
    std::int64_t pred_step = -1;  // step index of the last prediction
  };
  bool coupled(int a, int b) const;
  bool can_predict(int l) const;
  bool can_correct(int l) const;

  std::vector<bool> populated_;
  std::vector<std::vector<bool>> adjacent_;
  std::int64_t end_tick_;
  std::vector<State> state_;
};

/// Cluster level pairs that share at least one interior face.
std::vector<std::vector<bool>> cluster_adjacency(const Clustering& c, const FaceAdjacency& adjacency);

}  // namespace aderlts
