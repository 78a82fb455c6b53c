#include "aderlts/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "aderlts/equations.hpp"

namespace aderlts {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kPreprocessInfo = "preprocess.json";

fs::path resolve(const fs::path& p, const fs::path& base) {
  if (p.empty() || p.is_absolute()) return p;
  return fs::weakly_canonical(base / p);
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

Vec3 get_point(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(what + " must be an array of three numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

SourceTimeFunction parse_stf(const json& j, const fs::path& base) {
  if (j.contains("brune")) {
    const auto& b = j["brune"];
    return SourceTimeFunction::brune(get_or(b, "rise_time", 0.0), get_or(b, "dt", 0.0), get_or(b, "duration", 0.0));
  }
  SourceTimeFunction s;
  s.dt = get_or(j, "dt", 0.0);
  if (j.contains("rate")) {
    s.rate = j["rate"].get<std::vector<double>>();
  } else if (j.contains("file")) {
    const fs::path path = resolve(j["file"].get<std::string>(), base);
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read source time function " + path.string());
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      s.rate.push_back(std::stod(line));
    }
  } else {
    throw ConfigError("source time function needs 'brune', 'rate' or 'file'");
  }
  if (!(s.dt > 0.0) || s.rate.empty()) throw ConfigError("source time function needs dt > 0 and samples");
  return s;
}

std::uint64_t fnv1a(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::uint64_t h = 1469598103934665603ULL;
  char buf[65536];
  while (in) {
    in.read(buf, sizeof(buf));
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  return h;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

RelaxationSet relaxation_for(const RunConfig& cfg) {
  RelaxationSet r;
  if (cfg.mechanisms == 0) return r;
  r.omega = relaxation_frequencies(cfg.center_frequency, cfg.mechanisms);
  r.center_frequency = cfg.center_frequency;
  return r;
}

SolverOptions solver_options(const RunConfig& cfg) {
  SolverOptions o;
  o.order = cfg.order;
  o.width = cfg.width;
  o.relax = relaxation_for(cfg);
  o.t_end = cfg.t_end;
  o.receiver_interval = cfg.receiver_interval;
  o.sources = cfg.sources;
  return o;
}

std::vector<LocatedPoint> locate_all(const std::vector<ElementGeometry>& geom, const RunConfig& cfg, bool sources) {
  std::vector<LocatedPoint> out;
  const std::size_t n = sources ? cfg.sources.size() : cfg.receivers.size();
  for (std::size_t i = 0; i < n; ++i) {
    LocatedPoint p;
    p.index = static_cast<std::int64_t>(i);
    p.name = sources ? "source" + std::to_string(i) : cfg.receivers[i].name;
    p.location = sources ? cfg.sources[i].location : cfg.receivers[i].location;
    p.global_element = locate_point(geom, p.location);
    if (p.global_element < 0) {
      std::ostringstream s;
      s << (sources ? "source " : "receiver ") << p.name << " at (" << p.location[0] << ", " << p.location[1] << ", "
        << p.location[2] << ") lies outside the mesh";
      throw ConfigError(s.str());
    }
    out.push_back(p);
  }
  return out;
}

void write_seismograms(const fs::path& dir, const std::map<std::int64_t, std::vector<Seismogram>>& seis, int width) {
  fs::create_directories(dir);
  for (const auto& [idx, sets] : seis)
    for (int w = 0; w < static_cast<int>(sets.size()); ++w) {
      const std::string stem = width == 1 ? sets[w].name : sets[w].name + ".w" + std::to_string(w);
      write_seismogram_csv(dir / (stem + ".csv"), sets[w]);
    }
}

FieldFunction constant_state(const std::vector<double>& v) {
  return [v](const Vec3&, int) {
    std::array<double, 9> out{};
    for (int i = 0; i < 9; ++i) out[i] = v[i];
    return out;
  };
}

json summary_json(const RunConfig& cfg, const RunSummary& s, double dt_min, const Clustering* c) {
  json j;
  j["scheme"] = s.scheme;
  j["order"] = cfg.order;
  j["precision"] = cfg.precision;
  j["width"] = cfg.width;
  j["mechanisms"] = cfg.mechanisms;
  j["partitions"] = s.scheme == "gts" ? 1 : cfg.partitions;
  j["clusters"] = c ? c->nc : 1;
  j["lambda"] = c ? c->lambda : 1.0;
  j["t_end"] = cfg.t_end;
  j["dt_min"] = dt_min;
  j["lts_element_updates"] = s.stats.lts_updates;
  j["gts_element_updates"] = s.stats.gts_updates;
  j["realized_speedup"] = s.stats.realized_speedup;
  j["theoretical_speedup"] = s.theoretical_speedup;
  j["cluster_steps"] = s.stats.cluster_steps;
  j["messages"] = s.stats.messages;
  j["wall_seconds"] = s.stats.wall_seconds;
  if (cfg.mechanisms > 0) j["anelastic_cost_ratio"] = s.anelastic_cost_ratio;
  j["receivers"] = s.receivers;
  j["seismogram_sets"] = s.seismogram_sets;
  return j;
}

template <typename Real>
RunSummary run_gts(const RunConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const TetMesh mesh = load_mesh(cfg.mesh);
  const auto mats = load_materials(cfg.materials, mesh);
  const auto adj = build_adjacency(mesh);
  const auto geom = compute_geometry(mesh);
  const auto ts = cfl_timesteps(geom, mats, cfg.order, cfg.cfl);
  const auto ref = assemble_reference_matrices(cfg.order);
  const SolverOptions opt = solver_options(cfg);
  GtsSolver<Real> solver(mesh, adj, mats, ref, opt, ts.dt_min);
  for (const auto& r : locate_all(geom, cfg, false)) solver.add_receiver(r.index, r.name, r.location, r.global_element);
  for (const auto& s : locate_all(geom, cfg, true)) solver.add_source(cfg.sources[s.index], s.global_element);
  if (!cfg.initial_state.empty()) solver.project(constant_state(cfg.initial_state));
  while (solver.advance()) {
  }
  solver.finish();
  RunSummary s;
  s.scheme = "gts";
  s.stats.lts_updates = solver.element_updates();
  s.stats.gts_updates = solver.element_updates();
  s.stats.cluster_steps = {solver.steps()};
  s.stats.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  s.receivers = static_cast<std::int64_t>(solver.seismograms().size());
  s.seismogram_sets = cfg.width;
  write_seismograms(cfg.output / "receivers", solver.seismograms(), cfg.width);
  if (cfg.mechanisms > 0)
    s.anelastic_cost_ratio = measure_update_cost(cfg.order, cfg.mechanisms, cfg.width, cfg.precision) /
                             measure_update_cost(cfg.order, 0, cfg.width, cfg.precision);
  write_json(cfg.output / "run_summary.json", summary_json(cfg, s, ts.dt_min, nullptr));
  return s;
}

template <typename Real>
RunSummary run_lts_from_files(const RunConfig& cfg) {
  const fs::path info_path = cfg.output / kPreprocessInfo;
  if (!fs::exists(info_path)) throw ConfigError("no preprocess output in " + cfg.output.string());
  const json info = read_json(info_path);
  auto check = [&](const char* key, const json& expected) {
    if (!info.contains(key) || info[key] != expected)
      throw VersionError(std::string("partition files were made for ") + key + " = " +
                         (info.contains(key) ? info[key].dump() : "?") + ", config has " + expected.dump());
  };
  check("format_version", kPartitionFormatVersion);
  check("order", cfg.order);
  check("precision", cfg.precision);
  check("width", cfg.width);
  check("mechanisms", cfg.mechanisms);
  check("partitions", cfg.partitions);

  std::vector<PartitionData> parts;
  for (const auto& f : info["partition_files"]) parts.push_back(read_partition(cfg.output / f.get<std::string>()));
  if (static_cast<int>(parts.size()) != cfg.partitions) throw VersionError("partition file count differs from config");
  for (const auto& p : parts) {
    if (p.receivers.size() + p.sources.size() > cfg.receivers.size() + cfg.sources.size())
      throw VersionError("partition files name more points than the config");
    for (const auto& s : p.sources)
      if (s.index >= static_cast<std::int64_t>(cfg.sources.size())) throw VersionError("source list changed since preprocess");
  }

  Clustering c;
  c.nc = parts[0].nc;
  c.lambda = parts[0].lambda;
  c.dt_min = parts[0].dt_min;
  for (const auto& p : parts) c.cluster.insert(c.cluster.end(), p.cluster.begin(), p.cluster.begin() + p.num_local);

  const auto ref = assemble_reference_matrices(cfg.order);
  const SolverOptions opt = solver_options(cfg);
  LtsRunOptions run;
  run.threaded = cfg.threaded;
  FieldFunction ic;
  if (!cfg.initial_state.empty()) {
    ic = constant_state(cfg.initial_state);
    run.initial = &ic;
  }
  const auto res = run_lts<Real>(parts, ref, opt, run);
  RunSummary s;
  s.scheme = "lts";
  s.stats = res.stats;
  s.theoretical_speedup = theoretical_speedup(c);
  s.receivers = static_cast<std::int64_t>(res.seismograms.size());
  s.seismogram_sets = cfg.width;
  write_seismograms(cfg.output / "receivers", res.seismograms, cfg.width);
  if (cfg.mechanisms > 0)
    s.anelastic_cost_ratio = measure_update_cost(cfg.order, cfg.mechanisms, cfg.width, cfg.precision) /
                             measure_update_cost(cfg.order, 0, cfg.width, cfg.precision);
  write_json(cfg.output / "run_summary.json", summary_json(cfg, s, c.dt_min, &c));
  return s;
}

template <typename Real>
double update_cost(int order, int mechanisms, int width, int repetitions) {
  BoxSpec spec;
  spec.x = spec.y = spec.z = uniform_axis(0.0, 1.0, 2);
  const TetMesh mesh = generate_box(spec);
  const auto adj = build_adjacency(mesh);
  const std::vector<Material> mats(mesh.elements.size(), Material::from_velocities(2700, 6000, 3464, 120, 40));
  SolverOptions opt;
  opt.order = order;
  opt.width = width;
  opt.t_end = 1.0;
  if (mechanisms > 0) opt.relax = fit_relaxation(120, 40, 1.0, mechanisms);
  const auto ref = assemble_reference_matrices(order);
  const int steps = 10;
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, repetitions); ++r) {
    GtsSolver<Real> solver(mesh, adj, mats, ref, opt, 1.0 / steps);
    solver.project([](const Vec3& x, int) {
      return std::array<double, 9>{x[0], x[1], x[2], 0.1, 0.2, 0.3, x[0] * x[1], 0.0, 1.0};
    });
    const auto t0 = std::chrono::steady_clock::now();
    while (solver.advance()) {
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    best = std::min(best, dt / static_cast<double>(solver.element_updates()));
  }
  return best;
}

}  // namespace

void RunConfig::validate() const {
  if (order < 1 || order > 5) throw ConfigError("order must be in [1, 5]");
  if (precision != 32 && precision != 64) throw ConfigError("precision must be 32 or 64");
  if (mechanisms < 0) throw ConfigError("mechanisms must be >= 0");
  if (mechanisms > 0 && !(center_frequency > 0.0)) throw ConfigError("center_frequency must be positive");
  if (clusters < 1) throw ConfigError("clusters must be >= 1");
  if (!optimize_lambda && !(lambda > 0.5 && lambda <= 1.0)) throw ConfigError("lambda must be in (0.5, 1]");
  if (!(cfl > 0.0)) throw ConfigError("cfl must be positive");
  if (partitions < 1) throw ConfigError("partitions must be >= 1");
  if (width < 1) throw ConfigError("width must be >= 1");
  if (!(t_end > 0.0)) throw ConfigError("t_end must be positive");
  if (!receivers.empty() && !(receiver_interval > 0.0)) throw ConfigError("receiver_interval must be positive");
  if (mode != "preprocess" && mode != "run" && mode != "both") throw ConfigError("mode must be preprocess, run or both");
  if (scheme != "lts" && scheme != "gts") throw ConfigError("scheme must be lts or gts");
  if (!initial_state.empty() && initial_state.size() != 9) throw ConfigError("initial_state needs 9 values");
  if (mesh.empty()) throw ConfigError("mesh path missing");
  if (materials.empty()) throw ConfigError("materials path missing");
  for (const auto& s : sources)
    if (s.slot >= width) throw ConfigError("source slot exceeds the fusion width");
  std::map<std::string, int> names;
  for (const auto& r : receivers)
    if (names[r.name]++ > 0) throw ConfigError("duplicate receiver name " + r.name);
}

RunConfig parse_config(const std::string& text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::vector<std::string> known{
      "mesh", "materials", "output", "order", "precision", "mechanisms", "center_frequency", "clusters", "lambda",
      "cfl", "partitions", "width", "t_end", "receiver_interval", "sources", "receivers", "initial_state", "mode",
      "scheme", "threads"};
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end()) throw ConfigError("unknown config field '" + key + "'");

  RunConfig c;
  c.mesh = resolve(get_or<std::string>(j, "mesh", ""), base_dir);
  c.materials = resolve(get_or<std::string>(j, "materials", ""), base_dir);
  c.output = resolve(get_or<std::string>(j, "output", "output"), base_dir);
  c.order = get_or(j, "order", c.order);
  c.precision = get_or(j, "precision", c.precision);
  c.mechanisms = get_or(j, "mechanisms", c.mechanisms);
  c.center_frequency = get_or(j, "center_frequency", c.center_frequency);
  c.clusters = get_or(j, "clusters", c.clusters);
  if (j.contains("lambda")) {
    if (j["lambda"].is_string()) {
      if (j["lambda"] != "optimize") throw ConfigError("lambda must be a number or \"optimize\"");
      c.optimize_lambda = true;
    } else {
      c.lambda = get_or(j, "lambda", c.lambda);
    }
  }
  c.cfl = get_or(j, "cfl", c.cfl);
  c.partitions = get_or(j, "partitions", c.partitions);
  c.width = get_or(j, "width", c.width);
  c.t_end = get_or(j, "t_end", c.t_end);
  c.receiver_interval = get_or(j, "receiver_interval", c.receiver_interval);
  c.mode = get_or<std::string>(j, "mode", c.mode);
  c.scheme = get_or<std::string>(j, "scheme", c.scheme);
  c.threaded = get_or(j, "threads", c.threaded);
  c.initial_state = get_or(j, "initial_state", c.initial_state);
  for (const auto& s : get_or(j, "sources", json::array())) {
    PointSource p;
    p.location = get_point(s.value("location", json()), "source location");
    const auto m = s.value("moment", std::vector<double>{});
    if (m.size() != 6) throw ConfigError("source moment needs 6 components (xx, yy, zz, xy, yz, xz)");
    std::copy(m.begin(), m.end(), p.moment.begin());
    if (!s.contains("stf")) throw ConfigError("source needs an 'stf'");
    p.stf = parse_stf(s["stf"], base_dir);
    p.slot = s.value("slot", -1);
    c.sources.push_back(p);
  }
  int unnamed = 0;
  for (const auto& r : get_or(j, "receivers", json::array())) {
    ReceiverConfig rc;
    rc.name = r.value("name", "receiver" + std::to_string(unnamed++));
    rc.location = get_point(r.value("location", json()), "receiver location");
    c.receivers.push_back(rc);
  }
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), fs::absolute(path).parent_path());
}

std::string config_to_json(const RunConfig& c) {
  json j;
  j["mesh"] = c.mesh.string();
  j["materials"] = c.materials.string();
  j["output"] = c.output.string();
  j["order"] = c.order;
  j["precision"] = c.precision;
  j["mechanisms"] = c.mechanisms;
  j["center_frequency"] = c.center_frequency;
  j["clusters"] = c.clusters;
  if (c.optimize_lambda)
    j["lambda"] = "optimize";
  else
    j["lambda"] = c.lambda;
  j["cfl"] = c.cfl;
  j["partitions"] = c.partitions;
  j["width"] = c.width;
  j["t_end"] = c.t_end;
  j["receiver_interval"] = c.receiver_interval;
  j["mode"] = c.mode;
  j["scheme"] = c.scheme;
  j["threads"] = c.threaded;
  if (!c.initial_state.empty()) j["initial_state"] = c.initial_state;
  j["sources"] = json::array();
  for (const auto& s : c.sources)
    j["sources"].push_back({{"location", s.location},
                            {"moment", s.moment},
                            {"slot", s.slot},
                            {"stf", {{"dt", s.stf.dt}, {"rate", s.stf.rate}}}});
  j["receivers"] = json::array();
  for (const auto& r : c.receivers) j["receivers"].push_back({{"name", r.name}, {"location", r.location}});
  return j.dump(2);
}

PreprocessResult preprocess(const RunConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.output / "partitions");
  const TetMesh mesh = load_mesh(cfg.mesh);
  const auto mats = load_materials(cfg.materials, mesh);
  const auto adj = build_adjacency(mesh);
  const auto geom = compute_geometry(mesh);

  PreprocessResult out;
  out.timesteps = cfl_timesteps(geom, mats, cfg.order, cfg.cfl);
  const double lambda = cfg.optimize_lambda ? optimize_lambda(out.timesteps, adj, cfg.clusters).lambda : cfg.lambda;
  const Clustering raw = assign_clusters(out.timesteps, cfg.clusters, lambda);
  out.clustering = normalize_clusters(raw, adj);
  std::int64_t lowered = 0;
  for (std::size_t k = 0; k < raw.cluster.size(); ++k) lowered += raw.cluster[k] != out.clustering.cluster[k];
  write_clustering_report((cfg.output / "clustering_report.csv").string(), out.clustering, out.timesteps, lowered);
  {
    std::ofstream ts(cfg.output / "timesteps.csv");
    ts << std::setprecision(17) << "element,dt,dt_rel,cluster\n";
    for (std::size_t k = 0; k < out.timesteps.dt.size(); ++k)
      ts << k << ',' << out.timesteps.dt[k] << ',' << out.timesteps.dt[k] / out.timesteps.dt_min << ','
         << out.clustering.cluster[k] << '\n';
  }

  const int face_modes = basis_counts(cfg.order).nb2d;
  const DualGraph graph = build_dual_graph(adj, out.clustering, face_modes);
  const auto part = partition_graph(graph, cfg.partitions);
  out.stats = partition_stats(graph, part, out.clustering, cfg.partitions);
  const auto parts = build_partitions(mesh, adj, mats, out.clustering, part, cfg.partitions, locate_all(geom, cfg, false),
                                      locate_all(geom, cfg, true));
  {
    std::ofstream pr(cfg.output / "partition_report.csv");
    pr << "partition,elements,ghosts,comm_faces,weight";
    for (int l = 1; l <= out.clustering.nc; ++l) pr << ",cluster_" << l;
    pr << '\n';
    for (const auto& d : parts) {
      pr << d.partition << ',' << d.num_local << ',' << d.num_ghosts() << ',' << d.comm.size() << ','
         << out.stats.weight[d.partition];
      for (auto n : out.stats.cluster_count[d.partition]) pr << ',' << n;
      pr << '\n';
    }
    pr << std::setprecision(10) << "# weight_imbalance=" << out.stats.weight_imbalance
       << " element_imbalance=" << out.stats.element_imbalance << " cut_faces=" << out.stats.cut_faces << '\n';
  }
  json info;
  info["format_version"] = kPartitionFormatVersion;
  info["order"] = cfg.order;
  info["precision"] = cfg.precision;
  info["width"] = cfg.width;
  info["mechanisms"] = cfg.mechanisms;
  info["partitions"] = cfg.partitions;
  info["clusters"] = out.clustering.nc;
  info["lambda"] = out.clustering.lambda;
  info["dt_min"] = out.clustering.dt_min;
  info["elements"] = mesh.num_elements();
  info["theoretical_speedup"] = theoretical_speedup(out.clustering);
  info["partition_files"] = json::array();
  for (const auto& d : parts) {
    char name[64];
    std::snprintf(name, sizeof(name), "partitions/part_%04u.bin", d.partition);
    write_partition(cfg.output / name, d);
    out.partition_files.push_back(cfg.output / name);
    info["partition_files"].push_back(name);
  }
  write_json(cfg.output / kPreprocessInfo, info);
  write_manifest(cfg.output);
  return out;
}

RunSummary run(const RunConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.output);
  RunSummary s;
  if (cfg.scheme == "gts") {
    s = cfg.precision == 32 ? run_gts<float>(cfg) : run_gts<double>(cfg);
  } else {
    if (cfg.mode == "both") preprocess(cfg);
    s = cfg.precision == 32 ? run_lts_from_files<float>(cfg) : run_lts_from_files<double>(cfg);
  }
  write_manifest(cfg.output);
  return s;
}

void write_manifest(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  json j;
  j["files"] = json::array();
  for (const auto& f : files) {
    char hash[17];
    std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(fnv1a(f)));
    j["files"].push_back({{"path", fs::relative(f, dir).generic_string()},
                          {"bytes", static_cast<std::uint64_t>(fs::file_size(f))},
                          {"fnv1a64", hash}});
  }
  write_json(dir / "manifest.json", j);
}

void report(const fs::path& dir, std::ostream& os) {
  auto dump = [&](const fs::path& p) {
    if (!fs::exists(p)) return;
    os << "== " << p.filename().string() << '\n';
    std::ifstream in(p);
    os << in.rdbuf() << '\n';
  };
  if (!fs::exists(dir)) throw ConfigError("no output directory " + dir.string());
  dump(dir / "clustering_report.csv");
  dump(dir / "partition_report.csv");
  dump(dir / "run_summary.json");
  if (fs::exists(dir / "receivers")) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir / "receivers")) names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    os << "== receivers (" << names.size() << ")\n";
    for (const auto& n : names) os << n << '\n';
  }
}

double compare_runs(const fs::path& run_dir, const fs::path& reference_dir, const fs::path& out) {
  const fs::path a = run_dir / "receivers", b = reference_dir / "receivers";
  if (!fs::exists(a) || !fs::exists(b)) throw ConfigError("both runs need a receivers directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(a))
    if (e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::ofstream csv(out);
  if (!csv) throw ConfigError("cannot write " + out.string());
  csv << std::setprecision(17) << "receiver,channel,misfit\n";
  double worst = 0.0;
  static const char* kChannels[3] = {"u", "v", "w"};
  for (const auto& f : files) {
    const fs::path ref_file = b / f.filename();
    if (!fs::exists(ref_file)) throw ConfigError("reference has no receiver " + f.filename().string());
    const auto s = read_seismogram_csv(f);
    const auto r = read_seismogram_csv(ref_file);
    for (int c = 0; c < 3; ++c) {
      csv << f.stem().string() << ',' << kChannels[c] << ',';
      try {
        const double e = misfit(s.channels[c], r.channels[c]);
        worst = std::max(worst, e);
        csv << e << '\n';
      } catch (const MisfitError&) {
        csv << "undefined\n";
      }
    }
  }
  return worst;
}

double measure_update_cost(int order, int mechanisms, int width, int precision, int repetitions) {
  return precision == 32 ? update_cost<float>(order, mechanisms, width, repetitions)
                         : update_cost<double>(order, mechanisms, width, repetitions);
}

}  // namespace aderlts
