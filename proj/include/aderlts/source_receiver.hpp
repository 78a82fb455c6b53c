#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "aderlts/basis.hpp"
#include "aderlts/mesh.hpp"

namespace aderlts {

/// Uniformly sampled moment-rate history (1/s), linearly interpolated between
/// samples and zero outside [0, dt * (n - 1)].
struct SourceTimeFunction {
  double dt = 0.0;
  std::vector<double> rate;

  double value(double t) const;
  /// Exact integral of the piecewise-linear rate over [t0, t1].
  double integral(double t0, double t1) const;

  /// Brune-type pulse rate = (t/T^2) exp(-t/T) with unit total moment,
  /// sampled at dt up to `duration`.
  static SourceTimeFunction brune(double rise_time, double dt, double duration);
};

/// Moment tensor components in state order (xx, yy, zz, xy, yz, xz), N m.
struct PointSource {
  Vec3 location{};
  std::array<double, 6> moment{};
  SourceTimeFunction stf;
  int slot = -1;  // fused slot it acts on, -1 for every slot
};

/// Point source bound to its containing element. Injection adds
/// -moment[p] * phi_b(xi_s) / |det J| * integral(rate) to stress row p.
struct ProjectedSource {
  std::int64_t element = -1;
  std::vector<double> modal;  // phi_b(xi_s) / |det J|
  std::array<double, 6> moment{};
  SourceTimeFunction stf;
  int slot = -1;
};

/// Binds a source to a known containing element.
ProjectedSource bind_source(const PointSource& src, std::int64_t element, const ElementGeometry& geometry,
                            const TetBasis& basis);
/// Throws ConfigError when the point lies outside the mesh.
ProjectedSource project_source(const PointSource& src, const std::vector<ElementGeometry>& geometry,
                               const TetBasis& basis);

/// Adds the source contribution over [t0, t1] to a state laid out
/// [quantity][mode][w]. Returns the integrated moment rate.
template <typename Real>
double inject_source(const ProjectedSource& src, double t0, double t1, int modes, int width, Real* state);

struct Receiver {
  std::string name;
  Vec3 location{};
  std::int64_t element = -1;
  std::vector<double> basis;  // phi_b at the receiver
};

Receiver bind_receiver(const std::string& name, const Vec3& location, std::int64_t element,
                       const ElementGeometry& geometry, const TetBasis& basis);
/// Throws ConfigError when the point lies outside the mesh.
Receiver locate_receiver(const std::string& name, const Vec3& location, const std::vector<ElementGeometry>& geometry,
                         const TetBasis& basis);

/// Evaluates the velocities (rows 6..8) of a modal state at the receiver.
template <typename Real>
std::array<double, 3> sample_velocity(const Receiver& r, const Real* state, int modes, int width, int slot);

/// Particle-velocity traces of one receiver for one fused slot. Samples are
/// at j * interval, j = 0 .. n_t - 1.
struct Seismogram {
  std::string name;
  Vec3 location{};
  double interval = 0.0;
  std::array<std::vector<double>, 3> channels;  // u, v, w

  std::size_t samples() const { return channels[0].size(); }
};

/// Number of samples j * interval <= t_end.
std::int64_t sample_count(double interval, double t_end);

/// E = sum (s - r)^2 / sum r^2. Throws MisfitError for an all-zero reference
/// and ParameterError for length mismatch.
double misfit(const std::vector<double>& s, const std::vector<double>& ref);
std::array<double, 3> misfit(const Seismogram& s, const Seismogram& ref);

/// Writes `time,u,v,w` rows.
void write_seismogram_csv(const std::filesystem::path& path, const Seismogram& s);
Seismogram read_seismogram_csv(const std::filesystem::path& path);

}  // namespace aderlts
