#include "aderlts/lts.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace aderlts {

TimestepSet cfl_timesteps(const std::vector<ElementGeometry>& geometry, const std::vector<Material>& mats, int order,
                          double cfl) {
  if (geometry.size() != mats.size()) throw ParameterError("geometry and materials differ in element count");
  if (geometry.empty()) throw ParameterError("cfl_timesteps: empty mesh");
  if (!(cfl > 0.0)) throw ParameterError("CFL factor must be positive");
  TimestepSet ts;
  ts.dt.resize(geometry.size());
  ts.dt_min = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < geometry.size(); ++k) {
    ts.dt[k] = cfl * geometry[k].insphere_diameter / ((2.0 * order - 1.0) * mats[k].vp());
    ts.dt_min = std::min(ts.dt_min, ts.dt[k]);
  }
  return ts;
}

double Clustering::cluster_dt(int l) const { return std::ldexp(lambda * dt_min, l - 1); }

std::vector<std::int64_t> Clustering::counts() const {
  std::vector<std::int64_t> n(nc, 0);
  for (int c : cluster) ++n[c - 1];
  return n;
}

Clustering assign_clusters(const TimestepSet& ts, int nc, double lambda) {
  if (nc < 1) throw ParameterError("cluster count must be >= 1");
  if (!(lambda > 0.5 && lambda <= 1.0)) throw ParameterError("lambda must lie in (0.5, 1]");
  Clustering c;
  c.nc = nc;
  c.lambda = lambda;
  c.dt_min = ts.dt_min;
  c.cluster.resize(ts.dt.size());
  for (std::size_t k = 0; k < ts.dt.size(); ++k) {
    int l = 1;
    while (l < nc && ts.dt[k] >= c.cluster_dt(l + 1)) ++l;
    c.cluster[k] = l;
  }
  return c;
}

Clustering normalize_clusters(const Clustering& c, const FaceAdjacency& adjacency) {
  Clustering out = c;
  std::deque<std::size_t> work;
  for (std::size_t k = 0; k < out.cluster.size(); ++k) work.push_back(k);
  std::vector<bool> queued(out.cluster.size(), true);
  while (!work.empty()) {
    const std::size_t k = work.front();
    work.pop_front();
    queued[k] = false;
    int bound = out.cluster[k];
    for (const FaceLink& l : adjacency[k])
      if (l.interior()) bound = std::min(bound, out.cluster[l.neighbor] + 1);
    if (bound == out.cluster[k]) continue;
    out.cluster[k] = bound;
    for (const FaceLink& l : adjacency[k])
      if (l.interior() && !queued[l.neighbor]) {
        queued[l.neighbor] = true;
        work.push_back(l.neighbor);
      }
  }
  return out;
}

double theoretical_speedup(const Clustering& c) {
  double denom = 0.0;
  for (int l : c.cluster) denom += std::ldexp(1.0, 1 - l);
  return static_cast<double>(c.cluster.size()) * c.lambda / denom;
}

LambdaChoice optimize_lambda(const TimestepSet& ts, const FaceAdjacency& adjacency, int nc) {
  LambdaChoice best;
  best.speedup = -1.0;
  for (int i = 51; i <= 100; ++i) {
    const double lambda = i / 100.0;
    Clustering c = normalize_clusters(assign_clusters(ts, nc, lambda), adjacency);
    const double s = theoretical_speedup(c);
    if (s >= best.speedup) {
      best.lambda = lambda;
      best.speedup = s;
      best.clustering = std::move(c);
    }
  }
  return best;
}

void write_clustering_report(const std::string& path, const Clustering& c, const TimestepSet& ts,
                             std::int64_t elements_lowered) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  const auto counts = c.counts();
  double denom = 0.0;
  for (int l = 1; l <= c.nc; ++l) denom += counts[l - 1] * std::ldexp(1.0, 1 - l);
  out << std::setprecision(10);
  out << "cluster,dt_lower_rel,dt_upper_rel,dt_step_rel,elements,load_share\n";
  for (int l = 1; l <= c.nc; ++l) {
    const double lower = std::ldexp(c.lambda, l - 1);
    out << l << ',' << lower << ',';
    if (l == c.nc)
      out << "inf";
    else
      out << 2.0 * lower;
    const double load = denom > 0.0 ? counts[l - 1] * std::ldexp(1.0, 1 - l) / denom : 0.0;
    out << ',' << lower << ',' << counts[l - 1] << ',' << load << '\n';
  }
  out << "# lambda=" << c.lambda << " nc=" << c.nc << " dt_min=" << ts.dt_min
      << " speedup=" << theoretical_speedup(c) << " elements=" << c.cluster.size()
      << " lowered_by_normalization=" << elements_lowered << '\n';
}

TimeGrid TimeGrid::build(double tick_dt, std::int64_t macro_ticks, double t_end) {
  if (!(t_end > 0.0)) throw ParameterError("end time must be positive");
  if (!(tick_dt > 0.0) || macro_ticks < 1) throw ParameterError("invalid time grid");
  TimeGrid g;
  g.tick_dt = tick_dt;
  g.macro_ticks = macro_ticks;
  const double macro_dt = tick_dt * static_cast<double>(macro_ticks);
  g.macros = static_cast<std::int64_t>(std::ceil(t_end / macro_dt * (1.0 - 1e-14)));
  g.macros = std::max<std::int64_t>(g.macros, 1);
  const double before = static_cast<double>(g.macros - 1) * macro_dt;
  g.last_tick_dt = (t_end - before) / static_cast<double>(macro_ticks);
  return g;
}

double TimeGrid::time(std::int64_t tick) const {
  const std::int64_t full = (macros - 1) * macro_ticks;
  if (tick <= full) return static_cast<double>(tick) * tick_dt;
  return static_cast<double>(full) * tick_dt + static_cast<double>(tick - full) * last_tick_dt;
}

double TimeGrid::step(std::int64_t tick, std::int64_t len) const {
  const std::int64_t full = (macros - 1) * macro_ticks;
  return static_cast<double>(len) * (tick < full ? tick_dt : last_tick_dt);
}

std::string ClusterAction::describe() const {
  std::ostringstream s;
  if (kind == Kind::kPredict)
    s << 'P' << cluster + 1 << '@' << tick;
  else
    s << 'C' << cluster + 1 << '[' << tick << ',' << tick + length << ']';
  return s.str();
}

ClusterScheduler::ClusterScheduler(std::vector<bool> populated, std::vector<std::vector<bool>> adjacent,
                                   std::int64_t end_tick)
    : populated_(std::move(populated)), adjacent_(std::move(adjacent)), end_tick_(end_tick), state_(populated_.size()) {
  if (adjacent_.size() != populated_.size()) throw ParameterError("cluster adjacency size mismatch");
  for (std::size_t l = 0; l < populated_.size(); ++l)
    if (populated_[l] && end_tick_ % length(static_cast<int>(l)) != 0)
      throw SchedulingError("end tick is not a multiple of cluster " + std::to_string(l + 1) + "'s step");
}

bool ClusterScheduler::coupled(int a, int b) const {
  if (b < 0 || b >= static_cast<int>(populated_.size())) return false;
  return populated_[b] && adjacent_[a][b];
}

bool ClusterScheduler::can_predict(int l) const {
  const State& s = state_[l];
  if (!populated_[l] || s.predicted || s.tick >= end_tick_) return false;
  // A finer neighbour still needs our previous B1/B2 until it catches up.
  if (coupled(l, l - 1) && state_[l - 1].tick < s.tick) return false;
  // Starting a new pair resets B3, which the coarser neighbour must have consumed.
  const std::int64_t n = s.tick / length(l);
  if (n % 2 == 0 && n > 0 && coupled(l, l + 1) && state_[l + 1].tick < s.tick) return false;
  return true;
}

bool ClusterScheduler::can_correct(int l) const {
  const State& s = state_[l];
  if (!populated_[l] || !s.predicted) return false;
  if (coupled(l, l - 1)) {
    const State& f = state_[l - 1];
    if (f.pred_step % 2 != 1 || f.pred_tick != s.tick + length(l - 1)) return false;
  }
  if (coupled(l, l + 1)) {
    const State& c = state_[l + 1];
    if (c.pred_tick != s.tick && c.pred_tick != s.tick - length(l)) return false;
    if (c.pred_tick < 0) return false;
  }
  return true;
}

std::optional<ClusterAction> ClusterScheduler::next(const std::function<bool(const ClusterAction&)>& ready) const {
  std::optional<ClusterAction> best;
  std::int64_t best_key = 0;
  for (int l = 0; l < static_cast<int>(populated_.size()); ++l) {
    ClusterAction a;
    a.cluster = l;
    a.tick = state_[l].tick;
    a.length = length(l);
    a.step = a.tick / a.length;
    std::int64_t key = 0;
    if (can_correct(l)) {
      a.kind = ClusterAction::Kind::kCorrect;
      if (ready && !ready(a)) continue;
      key = a.tick + a.length;
    } else if (can_predict(l)) {
      a.kind = ClusterAction::Kind::kPredict;
      key = a.tick;
    } else {
      continue;
    }
    if (!best || key < best_key) {
      best = a;
      best_key = key;
    }
  }
  return best;
}

ClusterAction ClusterScheduler::next_or_throw(const std::function<bool(const ClusterAction&)>& ready) const {
  auto a = next(ready);
  if (!a) {
    std::ostringstream s;
    s << "no eligible cluster action; state:";
    for (std::size_t l = 0; l < state_.size(); ++l)
      if (populated_[l])
        s << " C" << l + 1 << "(t=" << state_[l].tick << (state_[l].predicted ? ",P" : ",C") << ")";
    throw SchedulingError(s.str());
  }
  return *a;
}

void ClusterScheduler::complete(const ClusterAction& a) {
  State& s = state_[a.cluster];
  if (a.tick != s.tick) throw SchedulingError("action " + a.describe() + " is stale");
  if (a.kind == ClusterAction::Kind::kPredict) {
    if (s.predicted) throw SchedulingError("cluster predicted twice at the same time");
    s.predicted = true;
    s.pred_tick = a.tick;
    s.pred_step = a.step;
  } else {
    if (!s.predicted) throw SchedulingError("correction without prediction");
    s.predicted = false;
    s.tick += a.length;
  }
}

bool ClusterScheduler::done() const {
  for (std::size_t l = 0; l < state_.size(); ++l)
    if (populated_[l] && (state_[l].tick < end_tick_ || state_[l].predicted)) return false;
  return true;
}

std::vector<std::vector<bool>> cluster_adjacency(const Clustering& c, const FaceAdjacency& adjacency) {
  std::vector<std::vector<bool>> adj(c.nc, std::vector<bool>(c.nc, false));
  for (std::size_t k = 0; k < adjacency.size(); ++k)
    for (const FaceLink& l : adjacency[k])
      if (l.interior()) {
        const int a = c.cluster[k] - 1;
        const int b = c.cluster[l.neighbor] - 1;
        adj[a][b] = adj[b][a] = true;
      }
  return adj;
}

}  // namespace aderlts
