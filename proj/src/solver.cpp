#include "aderlts/solver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

#include "aderlts/quadrature.hpp"

namespace aderlts {

namespace {

std::vector<ElementGeometry> head(const std::vector<ElementGeometry>& g, std::int64_t n) {
  return {g.begin(), g.begin() + n};
}

}  // namespace

template <typename Real>
ElementSystem<Real>::ElementSystem(const std::vector<ElementGeometry>& geometry, const FaceAdjacency& adjacency,
                                   const std::vector<Material>& mats, std::int64_t num_local,
                                   const ReferenceMatrices& ref, const SolverOptions& opt)
    : ref_(ref),
      opt_(opt),
      kernels_(ref, opt.relax.omega, opt.width, opt.path),
      num_local_(num_local),
      geometry_(head(geometry, num_local)),
      mats_(mats.begin(), mats.begin() + num_local) {
  if (opt.order != ref.info.order) throw ParameterError("solver order differs from the reference matrices");
  if (!(opt.t_end > 0.0)) throw ParameterError("end time must be positive");
  const auto all = build_element_operators(geometry, adjacency, mats, opt.relax);
  ops_.reserve(num_local);
  for (std::int64_t k = 0; k < num_local; ++k) ops_.push_back(KernelElementOps<Real>::convert(all[k]));
  q_.assign(static_cast<std::size_t>(num_local) * kernels_.state_size(), Real(0));
  if (opt.receiver_interval > 0.0) samples_ = sample_count(opt.receiver_interval, opt.t_end);
  receivers_of_.resize(num_local);
  sources_of_.resize(num_local);
}

template <typename Real>
std::span<Real> ElementSystem<Real>::state(std::int64_t k) {
  const auto n = kernels_.state_size();
  return {q_.data() + static_cast<std::size_t>(k) * n, n};
}

template <typename Real>
std::span<const Real> ElementSystem<Real>::state(std::int64_t k) const {
  const auto n = kernels_.state_size();
  return {q_.data() + static_cast<std::size_t>(k) * n, n};
}

template <typename Real>
void ElementSystem<Real>::project(const FieldFunction& f) {
  const TetBasis basis(opt_.order);
  const auto quad = tet_quadrature(2 * opt_.order + 2);
  const int nb = basis.size(), w = opt_.width;
  std::vector<std::vector<double>> phi;
  for (const auto& p : quad.points) phi.push_back(basis.evaluate(p));
  std::vector<double> acc(static_cast<std::size_t>(kElasticVars) * nb * w);
  for (std::int64_t k = 0; k < num_local_; ++k) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t p = 0; p < quad.points.size(); ++p) {
      const Vec3 x = geometry_[k].to_physical(quad.points[p]);
      for (int s = 0; s < w; ++s) {
        const auto v = f(x, s);
        for (int r = 0; r < kElasticVars; ++r)
          for (int b = 0; b < nb; ++b) acc[(static_cast<std::size_t>(r) * nb + b) * w + s] += quad.weights[p] * phi[p][b] * v[r];
      }
    }
    auto q = state(k);
    std::fill(q.begin(), q.end(), Real(0));
    for (std::size_t i = 0; i < acc.size(); ++i) q[i] = static_cast<Real>(acc[i]);
  }
}

template <typename Real>
double ElementSystem<Real>::squared_error(const FieldFunction& exact, int first, int rows, int slot) const {
  if (first < 0 || rows < 1 || first + rows > kElasticVars) throw ParameterError("invalid error rows");
  const TetBasis basis(opt_.order);
  const auto quad = tet_quadrature(2 * opt_.order + 2);
  const int nb = basis.size(), w = opt_.width;
  double sum = 0.0;
  for (std::int64_t k = 0; k < num_local_; ++k) {
    const auto q = state(k);
    double local = 0.0;
    for (std::size_t p = 0; p < quad.points.size(); ++p) {
      const auto phi = basis.evaluate(quad.points[p]);
      const auto v = exact(geometry_[k].to_physical(quad.points[p]), slot);
      for (int r = first; r < first + rows; ++r) {
        double h = 0.0;
        for (int b = 0; b < nb; ++b) h += phi[b] * static_cast<double>(q[(static_cast<std::size_t>(r) * nb + b) * w + slot]);
        local += quad.weights[p] * (h - v[r]) * (h - v[r]);
      }
    }
    sum += std::abs(geometry_[k].determinant) * local;
  }
  return sum;
}

template <typename Real>
double ElementSystem<Real>::energy(int slot) const {
  const int nb = kernels_.modes(), w = opt_.width;
  double total = 0.0;
  for (std::int64_t k = 0; k < num_local_; ++k) {
    const auto q = state(k);
    const Material& m = mats_[k];
    auto at = [&](int r, int b) { return static_cast<double>(q[(static_cast<std::size_t>(r) * nb + b) * w + slot]); };
    double e = 0.0;
    // The basis is orthonormal, so quadratic forms decouple over modes.
    for (int b = 0; b < nb; ++b) {
      const double sxx = at(0, b), syy = at(1, b), szz = at(2, b);
      const double sxy = at(3, b), syz = at(4, b), sxz = at(5, b);
      const double tr = sxx + syy + szz;
      const double ss = sxx * sxx + syy * syy + szz * szz + 2.0 * (sxy * sxy + syz * syz + sxz * sxz);
      const double strain = (ss - m.lam / (3.0 * m.lam + 2.0 * m.mu) * tr * tr) / (4.0 * m.mu);
      const double kinetic = 0.5 * m.rho * (at(6, b) * at(6, b) + at(7, b) * at(7, b) + at(8, b) * at(8, b));
      e += strain + kinetic;
    }
    total += std::abs(geometry_[k].determinant) * e;
  }
  return total;
}

template <typename Real>
void ElementSystem<Real>::add_receiver(std::int64_t index, const std::string& name, const Vec3& location,
                                       std::int64_t element) {
  if (element < 0 || element >= num_local_) throw ConfigError("receiver " + name + " is not owned here");
  if (samples_ == 0) return;
  const TetBasis basis(opt_.order);
  receivers_of_[element].push_back({index, bind_receiver(name, location, element, geometry_[element], basis)});
  auto& out = seis_[index];
  out.assign(opt_.width, Seismogram{});
  for (auto& s : out) {
    s.name = name;
    s.location = location;
    s.interval = opt_.receiver_interval;
    for (auto& c : s.channels) c.assign(samples_, 0.0);
  }
}

template <typename Real>
void ElementSystem<Real>::add_source(const PointSource& src, std::int64_t element) {
  if (element < 0 || element >= num_local_) throw ConfigError("source is not owned here");
  if (src.slot >= opt_.width) throw ConfigError("source slot exceeds the fusion width");
  const TetBasis basis(opt_.order);
  sources_of_[element].push_back(bind_source(src, element, geometry_[element], basis));
}

template <typename Real>
void ElementSystem<Real>::sample_step(std::int64_t k, double t0, double t1, std::span<const Real> derivs) {
  if (receivers_of_[k].empty()) return;
  const double dt = opt_.receiver_interval;
  const int nb = kernels_.modes(), w = opt_.width, order = kernels_.order();
  const std::size_t ns = kernels_.state_size();
  auto j = static_cast<std::int64_t>(std::ceil(t0 / dt));
  while (j > 0 && static_cast<double>(j - 1) * dt >= t0) --j;
  while (static_cast<double>(j) * dt < t0) ++j;
  for (; j < samples_ && static_cast<double>(j) * dt < t1; ++j) {
    const double tau = static_cast<double>(j) * dt - t0;
    for (const auto& br : receivers_of_[k]) {
      auto& out = seis_[br.index];
      for (int s = 0; s < w; ++s)
        for (int c = 0; c < 3; ++c) {
          double v = 0.0, factor = 1.0;
          for (int d = 0; d < order; ++d) {
            const Real* row = derivs.data() + d * ns + static_cast<std::size_t>(6 + c) * nb * w;
            double m = 0.0;
            for (int b = 0; b < nb; ++b) m += br.receiver.basis[b] * static_cast<double>(row[b * w + s]);
            v += factor * m;
            factor *= tau / (d + 1);
          }
          out[s].channels[c][j] = v;
        }
    }
  }
}

template <typename Real>
void ElementSystem<Real>::sample_final(double t_end) {
  const double dt = opt_.receiver_interval;
  for (std::int64_t k = 0; k < num_local_; ++k)
    for (const auto& br : receivers_of_[k])
      for (std::int64_t j = 0; j < samples_; ++j) {
        if (static_cast<double>(j) * dt < t_end) continue;
        for (int s = 0; s < opt_.width; ++s) {
          const auto v = sample_velocity<Real>(br.receiver, state(k).data(), kernels_.modes(), opt_.width, s);
          for (int c = 0; c < 3; ++c) seis_[br.index][s].channels[c][j] = v[c];
        }
      }
}

template <typename Real>
void ElementSystem<Real>::inject(std::int64_t k, double t0, double t1) {
  for (const auto& src : sources_of_[k]) inject_source<Real>(src, t0, t1, kernels_.modes(), opt_.width, state(k).data());
}

// ---------------------------------------------------------------------------

template <typename Real>
PartitionSolver<Real>::PartitionSolver(const PartitionData& data, const ReferenceMatrices& ref,
                                       const SolverOptions& opt, const TimeGrid& grid, Transport* transport)
    : ElementSystem<Real>(data.geometry(), data.adjacency, data.materials, data.num_local, ref, opt),
      data_(data),
      grid_(grid),
      transport_(transport),
      scheduler_({true}, {{false}}, grid.end_tick()) {
  const int nc = data.nc;
  const std::int64_t n = data.num_local;
  members_.assign(nc, {});
  remote_faces_.assign(nc, 0);
  cluster_steps_.assign(nc, 0);
  std::vector<bool> populated(nc, false);
  std::vector<std::vector<bool>> adjacent(nc, std::vector<bool>(nc, false));
  needs_b2_.assign(n, 0);
  needs_b3_.assign(n, 0);
  for (std::int64_t k = 0; k < n; ++k) {
    const int l = data.cluster[k] - 1;
    members_[l].push_back(k);
    populated[l] = true;
    local_of_global_[data.global_id[k]] = k;
    for (const FaceLink& link : data.adjacency[k]) {
      if (!link.interior()) continue;
      const int ln = data.cluster[link.neighbor] - 1;
      if (std::abs(ln - l) > 1)
        throw SchedulingError("face neighbours " + std::to_string(data.global_id[k]) + " and " +
                              std::to_string(data.global_id[link.neighbor]) + " differ by more than one cluster");
      if (ln < l) needs_b2_[k] = 1;
      if (ln > l) needs_b3_[k] = 1;
      if (link.neighbor < n) adjacent[l][ln] = adjacent[ln][l] = true;
    }
  }
  comm_of_.assign(n, {});
  for (std::size_t i = 0; i < data.comm.size(); ++i) {
    const auto& c = data.comm[i];
    comm_of_[c.local].push_back(static_cast<int>(i));
    ++remote_faces_[data.cluster[c.local] - 1];
  }
  if (!data.comm.empty() && transport == nullptr) throw ParameterError("partition has remote faces but no transport");
  scheduler_ = ClusterScheduler(populated, adjacent, grid.end_tick());

  const auto& ks = this->kernels_;
  b1_.assign(static_cast<std::size_t>(n) * ks.elastic_size(), Real(0));
  b2_ = b1_;
  b3_ = b1_;
  diff_.assign(ks.elastic_size(), Real(0));
  derivs_.assign(ks.derivative_size(), Real(0));
  tint_.assign(ks.state_size(), Real(0));
  update_.assign(ks.state_size(), Real(0));
  payload_.assign(ks.payload_size(), Real(0));

  for (const auto& r : data.receivers) this->add_receiver(r.index, r.name, r.location, r.local);
  for (const auto& s : data.sources) {
    if (s.index < 0 || s.index >= static_cast<std::int64_t>(opt.sources.size()))
      throw ConfigError("partition file names source " + std::to_string(s.index) + " that is not configured");
    PointSource src = opt.sources[s.index];
    src.location = s.location;
    this->add_source(src, s.local);
  }
}

template <typename Real>
void PartitionSolver<Real>::receive() {
  if (transport_ == nullptr) return;
  std::vector<Real> values;
  for (const auto& msg : transport_->poll(static_cast<int>(data_.partition))) {
    const PayloadHeader h = decode_payload<Real>(msg, values);
    const auto it = local_of_global_.find(h.dest_element);
    if (it == local_of_global_.end())
      throw ProtocolError("payload for element " + std::to_string(h.dest_element) + " delivered to partition " +
                          std::to_string(data_.partition));
    if (values.size() != this->kernels_.payload_size())
      throw ProtocolError("payload for element " + std::to_string(h.dest_element) + " face " +
                          std::to_string(h.dest_face) + " has " + std::to_string(values.size()) + " values");
    const std::int64_t k = it->second;
    const int level = data_.cluster[k] - 1;
    if (h.tick < scheduler_.corrected_tick(level))
      throw ProtocolError("late payload for element " + std::to_string(h.dest_element) + " face " +
                          std::to_string(h.dest_face) + " tick " + std::to_string(h.tick));
    auto [slot, fresh] = mailbox_.try_emplace(Key{k, h.dest_face, h.tick});
    if (!fresh)
      throw ProtocolError("duplicate payload for element " + std::to_string(h.dest_element) + " face " +
                          std::to_string(h.dest_face) + " tick " + std::to_string(h.tick));
    slot->second = std::move(values);
    values.clear();
    ++arrived_[{level, h.tick}];
  }
}

template <typename Real>
bool PartitionSolver<Real>::ready(const ClusterAction& a) const {
  if (a.kind == ClusterAction::Kind::kPredict || remote_faces_[a.cluster] == 0) return true;
  const auto it = arrived_.find({a.cluster, a.tick});
  return it != arrived_.end() && it->second >= remote_faces_[a.cluster];
}

template <typename Real>
int PartitionSolver<Real>::advance(int max_actions) {
  receive();
  int done_count = 0;
  const auto gate = [this](const ClusterAction& a) { return ready(a); };
  while (done_count < max_actions) {
    const auto a = scheduler_.next(gate);
    if (!a) break;
    if (a->kind == ClusterAction::Kind::kPredict)
      predict(*a);
    else
      correct(*a);
    scheduler_.complete(*a);
    if (keep_trace_) trace_.push_back(a->describe());
    ++done_count;
  }
  return done_count;
}

template <typename Real>
void PartitionSolver<Real>::predict(const ClusterAction& a) {
  const auto& ks = this->kernels_;
  const std::size_t ne = ks.elastic_size();
  const double t0 = grid_.time(a.tick);
  const double t1 = grid_.time(a.tick + a.length);
  const double dt = grid_.step(a.tick, a.length);
  for (const std::int64_t k : members_[a.cluster]) {
    auto q = this->state(k);
    ks.ck_derivatives(q, this->ops_[k], derivs_);
    ks.taylor_integrate(derivs_, dt, ks.quantities(), tint_);
    Real* b1 = b1_.data() + k * ne;
    std::copy(tint_.begin(), tint_.begin() + static_cast<std::ptrdiff_t>(ne), b1);
    if (needs_b2_[k]) ks.taylor_integrate(derivs_, 0.5 * dt, kElasticVars, {b2_.data() + k * ne, ne});
    if (needs_b3_[k]) {
      Real* b3 = b3_.data() + k * ne;
      if (a.step % 2 == 0)
        std::copy(b1, b1 + ne, b3);
      else
        for (std::size_t i = 0; i < ne; ++i) b3[i] += b1[i];
    }
    this->sample_step(k, t0, t1, derivs_);
    std::fill(update_.begin(), update_.end(), Real(0));
    ks.volume(tint_, this->ops_[k], update_);
    ks.surface_local(tint_, this->ops_[k], update_);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] += update_[i];
    emit(k, a.cluster, a.tick, a.step);
  }
}

template <typename Real>
void PartitionSolver<Real>::send(const CommRecord& c, std::int64_t tick, int level, std::span<const Real> buffer) {
  std::fill(payload_.begin(), payload_.end(), Real(0));
  this->kernels_.face_payload(buffer, c.face, c.orientation, payload_);
  PayloadHeader h;
  h.dest_element = c.remote_global;
  h.tick = tick;
  h.dest_face = c.remote_face;
  h.source_cluster = level + 1;
  h.count = static_cast<std::int32_t>(payload_.size());
  h.precision = static_cast<std::int32_t>(sizeof(Real));
  transport_->send(static_cast<int>(data_.partition), c.remote_partition,
                   encode_payload<Real>(h, std::span<const Real>(payload_)));
}

template <typename Real>
void PartitionSolver<Real>::emit(std::int64_t k, int level, std::int64_t tick, std::int64_t step) {
  if (comm_of_[k].empty()) return;
  const std::size_t ne = this->kernels_.elastic_size();
  const std::span<const Real> b1(b1_.data() + k * ne, ne);
  const std::span<const Real> b2(b2_.data() + k * ne, ne);
  for (const int id : comm_of_[k]) {
    const CommRecord& c = data_.comm[id];
    const int lr = c.remote_cluster - 1;
    if (lr == level) {
      send(c, tick, level, b1);
    } else if (lr == level - 1) {
      // Finer receiver: first half now, second half for its next step.
      send(c, tick, level, b2);
      for (std::size_t i = 0; i < ne; ++i) diff_[i] = b1[i] - b2[i];
      send(c, tick + scheduler_.length(lr), level, diff_);
    } else if (lr == level + 1) {
      if (step % 2 == 1) send(c, tick - scheduler_.length(level), level, {b3_.data() + k * ne, ne});
    } else {
      throw SchedulingError("remote neighbour of element " + std::to_string(data_.global_id[k]) +
                            " is more than one cluster away");
    }
  }
}

template <typename Real>
std::span<const Real> PartitionSolver<Real>::neighbour_buffer(std::int64_t nb, int level, std::int64_t tick) {
  const std::size_t ne = this->kernels_.elastic_size();
  const int ln = data_.cluster[nb] - 1;
  if (ln == level) return {b1_.data() + nb * ne, ne};
  if (ln == level - 1) return {b3_.data() + nb * ne, ne};
  // Coarser neighbour: its step starts at a multiple of its length.
  if (tick % scheduler_.length(ln) == 0) return {b2_.data() + nb * ne, ne};
  const Real* b1 = b1_.data() + nb * ne;
  const Real* b2 = b2_.data() + nb * ne;
  for (std::size_t i = 0; i < ne; ++i) diff_[i] = b1[i] - b2[i];
  return diff_;
}

template <typename Real>
void PartitionSolver<Real>::correct(const ClusterAction& a) {
  const auto& ks = this->kernels_;
  const double t0 = grid_.time(a.tick);
  const double t1 = grid_.time(a.tick + a.length);
  for (const std::int64_t k : members_[a.cluster]) {
    std::fill(update_.begin(), update_.end(), Real(0));
    for (int i = 0; i < 4; ++i) {
      const FaceLink& link = data_.adjacency[k][i];
      if (!link.interior()) continue;
      if (link.neighbor < data_.num_local) {
        const auto buffer = neighbour_buffer(link.neighbor, a.cluster, a.tick);
        std::fill(payload_.begin(), payload_.end(), Real(0));
        ks.face_payload(buffer, link.neighbor_face, link.orientation, payload_);
        ks.surface_neighbor(i, payload_, this->ops_[k], update_);
      } else {
        const auto it = mailbox_.find(Key{k, i, a.tick});
        if (it == mailbox_.end())
          throw ProtocolError("missing payload for element " + std::to_string(data_.global_id[k]) + " face " +
                              std::to_string(i) + " tick " + std::to_string(a.tick));
        ks.surface_neighbor(i, it->second, this->ops_[k], update_);
        mailbox_.erase(it);
      }
    }
    auto q = this->state(k);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] += update_[i];
    this->inject(k, t0, t1);
  }
  arrived_.erase({a.cluster, a.tick});
  updates_ += static_cast<std::int64_t>(members_[a.cluster].size());
  ++cluster_steps_[a.cluster];
}

template <typename Real>
std::string PartitionSolver<Real>::blocked_reason() const {
  if (done()) return {};
  for (int l = 0; l < data_.nc; ++l) {
    if (remote_faces_[l] == 0) continue;
    const std::int64_t tick = scheduler_.corrected_tick(l);
    if (tick >= grid_.end_tick()) continue;
    for (const auto& c : data_.comm) {
      if (data_.cluster[c.local] - 1 != l) continue;
      if (!mailbox_.count(Key{c.local, c.face, tick})) {
        std::ostringstream s;
        s << "partition " << data_.partition << " waits for element " << data_.global_id[c.local] << " face "
          << c.face << " tick " << tick << " from partition " << c.remote_partition;
        return s.str();
      }
    }
  }
  return {};
}

template <typename Real>
void PartitionSolver<Real>::finish() {
  this->sample_final(grid_.time(grid_.end_tick()));
}

// ---------------------------------------------------------------------------

template <typename Real>
GtsSolver<Real>::GtsSolver(const TetMesh& mesh, const FaceAdjacency& adjacency, const std::vector<Material>& mats,
                           const ReferenceMatrices& ref, const SolverOptions& opt, double dt)
    : ElementSystem<Real>(compute_geometry(mesh), adjacency, mats, mesh.num_elements(), ref, opt),
      adjacency_(adjacency),
      grid_(TimeGrid::build(dt, 1, opt.t_end)) {
  const auto& ks = this->kernels_;
  derivs_.assign(ks.derivative_size(), Real(0));
  b1_.assign(static_cast<std::size_t>(this->num_local_) * ks.elastic_size(), Real(0));
  tint_.assign(ks.state_size(), Real(0));
  update_.assign(ks.state_size(), Real(0));
  payload_.assign(ks.payload_size(), Real(0));
}

template <typename Real>
bool GtsSolver<Real>::advance() {
  if (step_ >= grid_.end_tick()) return false;
  const auto& ks = this->kernels_;
  const std::size_t ne = ks.elastic_size();
  const double t0 = grid_.time(step_);
  const double t1 = grid_.time(step_ + 1);
  const double dt = grid_.step(step_, 1);
  for (std::int64_t k = 0; k < this->num_local_; ++k) {
    auto q = this->state(k);
    ks.ck_derivatives(q, this->ops_[k], derivs_);
    ks.taylor_integrate(derivs_, dt, ks.quantities(), tint_);
    std::copy(tint_.begin(), tint_.begin() + static_cast<std::ptrdiff_t>(ne), b1_.begin() + k * ne);
    this->sample_step(k, t0, t1, derivs_);
    std::fill(update_.begin(), update_.end(), Real(0));
    ks.volume(tint_, this->ops_[k], update_);
    ks.surface_local(tint_, this->ops_[k], update_);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] += update_[i];
  }
  for (std::int64_t k = 0; k < this->num_local_; ++k) {
    std::fill(update_.begin(), update_.end(), Real(0));
    for (int i = 0; i < 4; ++i) {
      const FaceLink& link = adjacency_[k][i];
      if (!link.interior()) continue;
      std::fill(payload_.begin(), payload_.end(), Real(0));
      ks.face_payload({b1_.data() + link.neighbor * ne, ne}, link.neighbor_face, link.orientation, payload_);
      ks.surface_neighbor(i, payload_, this->ops_[k], update_);
    }
    auto q = this->state(k);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] += update_[i];
    this->inject(k, t0, t1);
  }
  ++step_;
  return true;
}

template <typename Real>
void GtsSolver<Real>::finish() {
  this->sample_final(grid_.time(grid_.end_tick()));
}

// ---------------------------------------------------------------------------

TimeGrid lts_time_grid(const std::vector<PartitionData>& parts, double t_end) {
  if (parts.empty()) throw ParameterError("no partitions");
  int coarsest = 1;
  for (const auto& p : parts)
    for (std::int64_t k = 0; k < p.num_local; ++k) coarsest = std::max(coarsest, p.cluster[k]);
  return TimeGrid::build(parts[0].lambda * parts[0].dt_min, std::int64_t{1} << (coarsest - 1), t_end);
}

template <typename Real>
LtsRunResult run_lts(const std::vector<PartitionData>& parts, const ReferenceMatrices& ref, const SolverOptions& opt,
                     const LtsRunOptions& run) {
  const auto start = std::chrono::steady_clock::now();
  const TimeGrid grid = lts_time_grid(parts, opt.t_end);
  const int np = static_cast<int>(parts.size());
  LoopbackTransport transport(np);
  std::vector<std::unique_ptr<PartitionSolver<Real>>> solvers;
  for (const auto& p : parts) {
    if (static_cast<int>(p.num_partitions) != np) throw ParameterError("partition set is incomplete");
    solvers.push_back(std::make_unique<PartitionSolver<Real>>(p, ref, opt, grid, &transport));
    if (run.initial) solvers.back()->project(*run.initial);
  }

  auto stalled = [&]() {
    for (const auto& s : solvers) {
      const auto why = s->blocked_reason();
      if (!why.empty()) throw ProtocolError(why);
    }
    throw SchedulingError("no partition can make progress");
  };

  if (!run.threaded || np == 1) {
    bool all_done = false;
    while (!all_done) {
      bool progress = false;
      all_done = true;
      for (auto& s : solvers) {
        if (s->advance(64) > 0) progress = true;
        all_done = all_done && s->done();
      }
      if (!all_done && !progress) stalled();
    }
  } else {
    std::atomic<bool> abort{false};
    std::atomic<std::int64_t> last_progress{0};
    std::vector<std::exception_ptr> errors(np);
    std::vector<std::thread> workers;
    auto now_ms = [] {
      return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now().time_since_epoch())
          .count();
    };
    last_progress = now_ms();
    for (int p = 0; p < np; ++p)
      workers.emplace_back([&, p] {
        try {
          while (!solvers[p]->done() && !abort) {
            if (solvers[p]->advance(64) > 0) {
              last_progress = now_ms();
            } else {
              if (now_ms() - last_progress > 20000) {
                const auto why = solvers[p]->blocked_reason();
                throw ProtocolError(why.empty() ? "partition " + std::to_string(p) + " stalled" : why);
              }
              std::this_thread::yield();
            }
          }
        } catch (...) {
          errors[p] = std::current_exception();
          abort = true;
        }
      });
    for (auto& t : workers) t.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  LtsRunResult out;
  out.stats.cluster_steps.assign(parts[0].nc, 0);
  std::int64_t elements = 0;
  for (auto& s : solvers) {
    s->finish();
    out.stats.lts_updates += s->element_updates();
    for (int l = 0; l < parts[0].nc; ++l) out.stats.cluster_steps[l] = std::max(out.stats.cluster_steps[l], s->cluster_steps()[l]);
    for (const auto& [idx, seis] : s->seismograms()) out.seismograms[idx] = seis;
    elements += s->num_local();
  }
  if (run.exact) {
    out.squared_error.assign(opt.width, 0.0);
    for (auto& s : solvers)
      for (int w = 0; w < opt.width; ++w)
        out.squared_error[w] += s->squared_error(*run.exact, run.error_first_row, run.error_rows, w);
  }
  const auto gts_steps = static_cast<std::int64_t>(std::ceil(opt.t_end / parts[0].dt_min * (1.0 - 1e-14)));
  out.stats.gts_updates = elements * gts_steps;
  out.stats.realized_speedup =
      out.stats.lts_updates > 0 ? static_cast<double>(out.stats.gts_updates) / static_cast<double>(out.stats.lts_updates)
                                : 1.0;
  out.stats.messages = transport.sent();
  out.stats.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

template class ElementSystem<float>;
template class ElementSystem<double>;
template class PartitionSolver<float>;
template class PartitionSolver<double>;
template class GtsSolver<float>;
template class GtsSolver<double>;
template LtsRunResult run_lts<float>(const std::vector<PartitionData>&, const ReferenceMatrices&, const SolverOptions&,
                                     const LtsRunOptions&);
template LtsRunResult run_lts<double>(const std::vector<PartitionData>&, const ReferenceMatrices&,
                                      const SolverOptions&, const LtsRunOptions&);

}  // namespace aderlts
