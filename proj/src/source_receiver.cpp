#include "aderlts/source_receiver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace aderlts {

double SourceTimeFunction::value(double t) const {
  if (rate.empty() || t < 0.0) return 0.0;
  const double x = t / dt;
  const auto i = static_cast<std::size_t>(std::floor(x));
  if (i + 1 >= rate.size()) return i + 1 == rate.size() && x == static_cast<double>(i) ? rate[i] : 0.0;
  const double f = x - static_cast<double>(i);
  return (1.0 - f) * rate[i] + f * rate[i + 1];
}

double SourceTimeFunction::integral(double t0, double t1) const {
  if (rate.size() < 2 || t1 <= t0) return 0.0;
  const double end = dt * static_cast<double>(rate.size() - 1);
  const double a = std::max(t0, 0.0);
  const double b = std::min(t1, end);
  if (b <= a) return 0.0;
  // Trapezoid rule is exact on each linear piece.
  double sum = 0.0;
  auto first = static_cast<std::size_t>(std::floor(a / dt));
  auto last = static_cast<std::size_t>(std::floor(b / dt));
  last = std::min(last, rate.size() - 2);
  first = std::min(first, last);
  for (std::size_t i = first; i <= last; ++i) {
    const double lo = std::max(a, dt * static_cast<double>(i));
    const double hi = std::min(b, dt * static_cast<double>(i + 1));
    if (hi <= lo) continue;
    auto at = [&](double t) {
      const double f = t / dt - static_cast<double>(i);
      return (1.0 - f) * rate[i] + f * rate[i + 1];
    };
    sum += 0.5 * (hi - lo) * (at(lo) + at(hi));
  }
  return sum;
}

SourceTimeFunction SourceTimeFunction::brune(double rise_time, double dt, double duration) {
  if (!(rise_time > 0.0) || !(dt > 0.0) || !(duration > dt)) throw ParameterError("invalid source time function");
  SourceTimeFunction s;
  s.dt = dt;
  const auto n = static_cast<std::size_t>(std::ceil(duration / dt)) + 1;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = dt * static_cast<double>(i);
    s.rate.push_back(t / (rise_time * rise_time) * std::exp(-t / rise_time));
  }
  return s;
}

ProjectedSource project_source(const PointSource& src, const std::vector<ElementGeometry>& geometry,
                               const TetBasis& basis) {
  const auto k = locate_point(geometry, src.location);
  if (k < 0) {
    std::ostringstream s;
    s << "source at (" << src.location[0] << ", " << src.location[1] << ", " << src.location[2]
      << ") lies outside the mesh";
    throw ConfigError(s.str());
  }
  return bind_source(src, k, geometry[k], basis);
}

ProjectedSource bind_source(const PointSource& src, std::int64_t element, const ElementGeometry& geometry,
                            const TetBasis& basis) {
  if (src.stf.rate.empty() || !(src.stf.dt > 0.0)) throw ConfigError("source time function is empty");
  for (double r : src.stf.rate)
    if (!std::isfinite(r)) throw ConfigError("source time function is not finite");
  ProjectedSource p;
  p.element = element;
  p.modal = basis.evaluate(geometry.to_reference(src.location));
  const double inv = 1.0 / std::abs(geometry.determinant);
  for (double& v : p.modal) v *= inv;
  p.moment = src.moment;
  p.stf = src.stf;
  p.slot = src.slot;
  return p;
}

template <typename Real>
double inject_source(const ProjectedSource& src, double t0, double t1, int modes, int width, Real* state) {
  const double m = src.stf.integral(t0, t1);
  if (m == 0.0) return 0.0;
  const int s0 = src.slot < 0 ? 0 : src.slot;
  const int s1 = src.slot < 0 ? width : src.slot + 1;
  if (s1 > width) throw ParameterError("source slot exceeds the fusion width");
  for (int p = 0; p < 6; ++p) {
    const double amp = -src.moment[p] * m;
    if (amp == 0.0) continue;
    Real* row = state + static_cast<std::size_t>(p) * modes * width;
    for (int b = 0; b < modes; ++b)
      for (int s = s0; s < s1; ++s) row[b * width + s] += static_cast<Real>(amp * src.modal[b]);
  }
  return m;
}

Receiver locate_receiver(const std::string& name, const Vec3& location, const std::vector<ElementGeometry>& geometry,
                         const TetBasis& basis) {
  const auto k = locate_point(geometry, location);
  if (k < 0) throw ConfigError("receiver " + name + " lies outside the mesh");
  return bind_receiver(name, location, k, geometry[k], basis);
}

Receiver bind_receiver(const std::string& name, const Vec3& location, std::int64_t element,
                       const ElementGeometry& geometry, const TetBasis& basis) {
  Receiver r;
  r.name = name;
  r.location = location;
  r.element = element;
  r.basis = basis.evaluate(geometry.to_reference(location));
  return r;
}

template <typename Real>
std::array<double, 3> sample_velocity(const Receiver& r, const Real* state, int modes, int width, int slot) {
  std::array<double, 3> v{};
  for (int c = 0; c < 3; ++c) {
    const Real* row = state + static_cast<std::size_t>(6 + c) * modes * width;
    double s = 0.0;
    for (int b = 0; b < modes; ++b) s += r.basis[b] * static_cast<double>(row[b * width + slot]);
    v[c] = s;
  }
  return v;
}

std::int64_t sample_count(double interval, double t_end) {
  if (!(interval > 0.0)) throw ParameterError("receiver interval must be positive");
  return static_cast<std::int64_t>(std::floor(t_end / interval * (1.0 + 1e-12))) + 1;
}

double misfit(const std::vector<double>& s, const std::vector<double>& ref) {
  if (s.size() != ref.size()) throw ParameterError("misfit: sample counts differ");
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    num += (s[j] - ref[j]) * (s[j] - ref[j]);
    den += ref[j] * ref[j];
  }
  if (den == 0.0) throw MisfitError("misfit undefined for an all-zero reference");
  return num / den;
}

std::array<double, 3> misfit(const Seismogram& s, const Seismogram& ref) {
  if (std::abs(s.interval - ref.interval) > 1e-12 * std::max(1.0, ref.interval))
    throw ParameterError("misfit: sampling intervals differ");
  return {misfit(s.channels[0], ref.channels[0]), misfit(s.channels[1], ref.channels[1]),
          misfit(s.channels[2], ref.channels[2])};
}

void write_seismogram_csv(const std::filesystem::path& path, const Seismogram& s) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << std::setprecision(17);
  out << "# receiver=" << s.name << " x=" << s.location[0] << " y=" << s.location[1] << " z=" << s.location[2]
      << " interval=" << s.interval << '\n';
  out << "time,u,v,w\n";
  for (std::size_t j = 0; j < s.samples(); ++j)
    out << s.interval * static_cast<double>(j) << ',' << s.channels[0][j] << ',' << s.channels[1][j] << ','
        << s.channels[2][j] << '\n';
}

Seismogram read_seismogram_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  Seismogram s;
  std::string line;
  std::vector<double> times;
  while (std::getline(in, line)) {
    if (line.rfind("# receiver=", 0) == 0) {
      const auto pos = line.find("interval=");
      if (pos != std::string::npos) s.interval = std::stod(line.substr(pos + 9));
      continue;
    }
    if (line.empty() || line[0] == '#' || line.rfind("time", 0) == 0) continue;
    std::stringstream ss(line);
    std::string cell;
    std::array<double, 4> v{};
    for (int i = 0; i < 4; ++i) {
      if (!std::getline(ss, cell, ',')) throw ConfigError("malformed seismogram row in " + path.string());
      v[i] = std::stod(cell);
    }
    times.push_back(v[0]);
    for (int c = 0; c < 3; ++c) s.channels[c].push_back(v[c + 1]);
  }
  s.name = path.stem().string();
  if (s.interval == 0.0 && times.size() > 1) s.interval = times[1] - times[0];
  return s;
}

template double inject_source<float>(const ProjectedSource&, double, double, int, int, float*);
template double inject_source<double>(const ProjectedSource&, double, double, int, int, double*);
template std::array<double, 3> sample_velocity<float>(const Receiver&, const float*, int, int, int);
template std::array<double, 3> sample_velocity<double>(const Receiver&, const double*, int, int, int);

}  // namespace aderlts
