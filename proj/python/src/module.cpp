#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "aderlts/driver.hpp"
#include "aderlts/material.hpp"
#include "aderlts/mesh.hpp"

namespace py = pybind11;
using namespace aderlts;

namespace {

py::dict stats_dict(const RunStats& s) {
  py::dict d;
  d["lts_element_updates"] = s.lts_updates;
  d["gts_element_updates"] = s.gts_updates;
  d["realized_speedup"] = s.realized_speedup;
  d["cluster_steps"] = s.cluster_steps;
  d["messages"] = s.messages;
  d["wall_seconds"] = s.wall_seconds;
  return d;
}

TimestepSet timesteps(const std::vector<double>& dt) {
  if (dt.empty()) throw ParameterError("need at least one time step");
  TimestepSet ts;
  ts.dt = dt;
  ts.dt_min = *std::min_element(dt.begin(), dt.end());
  return ts;
}

}  // namespace

PYBIND11_MODULE(_aderlts, m) {
  m.doc() = "ADER-DG elastic wave propagation with local time stepping";

  auto base = py::register_exception<Error>(m, "AderError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<VersionError>(m, "VersionError", base.ptr());
  py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<MisfitError>(m, "MisfitError", base.ptr());

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("mesh", &RunConfig::mesh)
      .def_readwrite("materials", &RunConfig::materials)
      .def_readwrite("output", &RunConfig::output)
      .def_readwrite("order", &RunConfig::order)
      .def_readwrite("precision", &RunConfig::precision)
      .def_readwrite("mechanisms", &RunConfig::mechanisms)
      .def_readwrite("center_frequency", &RunConfig::center_frequency)
      .def_readwrite("clusters", &RunConfig::clusters)
      .def_readwrite("optimize_lambda", &RunConfig::optimize_lambda)
      .def_readwrite("lambda_", &RunConfig::lambda)
      .def_readwrite("cfl", &RunConfig::cfl)
      .def_readwrite("partitions", &RunConfig::partitions)
      .def_readwrite("width", &RunConfig::width)
      .def_readwrite("t_end", &RunConfig::t_end)
      .def_readwrite("receiver_interval", &RunConfig::receiver_interval)
      .def_readwrite("initial_state", &RunConfig::initial_state)
      .def_readwrite("mode", &RunConfig::mode)
      .def_readwrite("scheme", &RunConfig::scheme)
      .def_readwrite("threaded", &RunConfig::threaded)
      .def("validate", &RunConfig::validate)
      .def("to_json", &config_to_json);

  m.def("parse_config", &parse_config, py::arg("text"), py::arg("base_dir") = std::filesystem::path("."));
  m.def("load_config", &load_config, py::arg("path"));

  m.def(
      "preprocess",
      [](const RunConfig& cfg) {
        PreprocessResult r;
        {
          py::gil_scoped_release release;
          r = preprocess(cfg);
        }
        py::dict d;
        d["clusters"] = r.clustering.nc;
        d["lambda"] = r.clustering.lambda;
        d["dt_min"] = r.clustering.dt_min;
        d["cluster_counts"] = r.clustering.counts();
        d["theoretical_speedup"] = theoretical_speedup(r.clustering);
        d["weight_imbalance"] = r.stats.weight_imbalance;
        d["partition_files"] = r.partition_files;
        return d;
      },
      py::arg("config"));

  m.def(
      "run",
      [](const RunConfig& cfg) {
        RunSummary s;
        {
          py::gil_scoped_release release;
          s = run(cfg);
        }
        py::dict d = stats_dict(s.stats);
        d["scheme"] = s.scheme;
        d["theoretical_speedup"] = s.theoretical_speedup;
        d["anelastic_cost_ratio"] = s.anelastic_cost_ratio;
        d["receivers"] = s.receivers;
        d["seismogram_sets"] = s.seismogram_sets;
        return d;
      },
      py::arg("config"));

  m.def(
      "report",
      [](const std::filesystem::path& dir) {
        std::ostringstream os;
        report(dir, os);
        return os.str();
      },
      py::arg("dir"));
  m.def("compare_runs", &compare_runs, py::arg("run_dir"), py::arg("reference_dir"), py::arg("out_csv"));

  m.def(
      "read_seismogram",
      [](const std::filesystem::path& path) {
        const auto s = read_seismogram_csv(path);
        py::dict d;
        d["name"] = s.name;
        d["location"] = s.location;
        d["interval"] = s.interval;
        d["u"] = s.channels[0];
        d["v"] = s.channels[1];
        d["w"] = s.channels[2];
        return d;
      },
      py::arg("path"));
  m.def("misfit", py::overload_cast<const std::vector<double>&, const std::vector<double>&>(&misfit), py::arg("s"),
        py::arg("reference"));

  m.def(
      "assign_clusters",
      [](const std::vector<double>& dt, int nc, double lambda) {
        return assign_clusters(timesteps(dt), nc, lambda).cluster;
      },
      py::arg("dt"), py::arg("nc"), py::arg("lambda_") = 1.0);
  m.def(
      "theoretical_speedup",
      [](const std::vector<int>& cluster, int nc, double lambda) {
        Clustering c;
        c.nc = nc;
        c.lambda = lambda;
        c.cluster = cluster;
        return theoretical_speedup(c);
      },
      py::arg("cluster"), py::arg("nc"), py::arg("lambda_") = 1.0);
  m.def(
      "optimize_lambda",
      [](const std::vector<double>& dt, int nc) {
        const auto best = optimize_lambda(timesteps(dt), FaceAdjacency(dt.size()), nc);
        return py::make_tuple(best.lambda, best.speedup);
      },
      py::arg("dt"), py::arg("nc"));
  m.def(
      "basis_counts", [](int order) { return py::make_tuple(basis_counts(order).nb3d, basis_counts(order).nb2d); },
      py::arg("order"));

  m.def(
      "write_box",
      [](const std::filesystem::path& stem, std::vector<double> x, std::vector<double> y, std::vector<double> z,
         double rho, double vp, double vs, bool free_surface_top) {
        BoxSpec spec;
        spec.x = std::move(x);
        spec.y = std::move(y);
        spec.z = std::move(z);
        spec.free_surface_top = free_surface_top;
        const TetMesh mesh = generate_box(spec);
        std::filesystem::path msh = stem, mat = stem;
        msh += ".msh";
        mat += ".mat";
        write_mesh(mesh, msh);
        write_materials(mat, mesh, std::vector<Material>(mesh.elements.size(), Material::from_velocities(rho, vp, vs)));
        return py::make_tuple(msh, mat, mesh.num_elements());
      },
      py::arg("stem"), py::arg("x"), py::arg("y"), py::arg("z"), py::arg("rho") = 1.0, py::arg("vp") = 2.0,
      py::arg("vs") = 1.0, py::arg("free_surface_top") = false);
}
