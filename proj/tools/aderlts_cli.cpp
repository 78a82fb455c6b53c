// Command line front end: preprocess, run, report, compare and box.
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "aderlts/driver.hpp"
#include "aderlts/material.hpp"
#include "aderlts/mesh.hpp"

using namespace aderlts;

namespace {

struct Overrides {
  std::optional<int> order, precision, mechanisms, clusters, partitions, width;
  std::optional<double> lambda, t_end, cfl, receiver_interval;
  bool optimize_lambda = false;
  bool threads = false;
  std::string output, scheme;

  void attach(CLI::App* app) {
    app->add_option("--order", order, "polynomial order O in [1, 5]");
    app->add_option("--precision", precision, "floating point bits, 32 or 64");
    app->add_option("--mechanisms", mechanisms, "relaxation mechanisms m");
    app->add_option("--clusters", clusters, "number of time clusters N_c");
    app->add_option("--lambda", lambda, "cluster rate parameter in (0.5, 1]");
    app->add_flag("--optimize-lambda", optimize_lambda, "choose lambda by maximizing the theoretical speedup");
    app->add_option("--partitions", partitions, "number of partitions p");
    app->add_option("--width", width, "fused simulations W");
    app->add_option("--t-end", t_end, "end time in seconds");
    app->add_option("--cfl", cfl, "CFL factor");
    app->add_option("--receiver-interval", receiver_interval, "seismogram sampling interval");
    app->add_option("--output", output, "output directory");
    app->add_option("--scheme", scheme, "lts or gts")->check(CLI::IsMember({"lts", "gts"}));
    app->add_flag("--threads", threads, "one worker thread per partition");
  }

  void apply(RunConfig& c) const {
    if (order) c.order = *order;
    if (precision) c.precision = *precision;
    if (mechanisms) c.mechanisms = *mechanisms;
    if (clusters) c.clusters = *clusters;
    if (lambda) {
      c.lambda = *lambda;
      c.optimize_lambda = false;
    }
    if (optimize_lambda) c.optimize_lambda = true;
    if (partitions) c.partitions = *partitions;
    if (width) c.width = *width;
    if (t_end) c.t_end = *t_end;
    if (cfl) c.cfl = *cfl;
    if (receiver_interval) c.receiver_interval = *receiver_interval;
    if (!output.empty()) c.output = std::filesystem::absolute(output);
    if (!scheme.empty()) c.scheme = scheme;
    if (threads) c.threaded = true;
  }
};

void print_summary(const RunSummary& s) {
  std::cout << "scheme " << s.scheme << '\n'
            << "element updates " << s.stats.lts_updates << " (GTS equivalent " << s.stats.gts_updates << ")\n"
            << "realized speedup " << s.stats.realized_speedup << ", theoretical " << s.theoretical_speedup << '\n'
            << "wall time " << s.stats.wall_seconds << " s\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ADER-DG seismic wave propagation with local time stepping"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides ov;
  auto* pre = app.add_subcommand("preprocess", "cluster, partition and write per-partition files");
  pre->add_option("config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
  ov.attach(pre);

  Overrides run_ov;
  std::string run_config;
  bool skip_preprocess = false;
  auto* runc = app.add_subcommand("run", "run a configured simulation");
  runc->add_option("config", run_config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  runc->add_flag("--from-files", skip_preprocess, "use existing partition files instead of preprocessing");
  run_ov.attach(runc);

  std::string report_dir, compare_dir, compare_out;
  auto* rep = app.add_subcommand("report", "summarize an output directory");
  rep->add_option("dir", report_dir, "output directory")->required()->check(CLI::ExistingDirectory);
  rep->add_option("--compare", compare_dir, "reference output directory for a misfit report")
      ->check(CLI::ExistingDirectory);
  rep->add_option("--misfit-csv", compare_out, "where to write the misfit CSV (default <dir>/misfit.csv)");

  std::string box_out;
  std::vector<double> box_x{0.0, 1.0}, box_y{0.0, 1.0}, box_z{0.0, 1.0};
  int box_cells = 1;
  double rho = 2700.0, vp = 6000.0, vs = 3464.0, qp = 0.0, qs = 0.0;
  bool free_top = false;
  auto* box = app.add_subcommand("box", "write a structured tetrahedral box mesh and material sidecar");
  box->add_option("out", box_out, "output stem; writes <stem>.msh and <stem>.mat")->required();
  box->add_option("--x", box_x, "x axis coordinates")->expected(2, 100000);
  box->add_option("--y", box_y, "y axis coordinates")->expected(2, 100000);
  box->add_option("--z", box_z, "z axis coordinates")->expected(2, 100000);
  box->add_option("--cells", box_cells, "uniform cells per axis when axes are given by their two end points");
  box->add_flag("--free-surface-top", free_top, "free surface on the z = max face");
  box->add_option("--rho", rho);
  box->add_option("--vp", vp);
  box->add_option("--vs", vs);
  box->add_option("--qp", qp, "P quality factor, 0 for elastic");
  box->add_option("--qs", qs, "S quality factor, 0 for elastic");

  CLI11_PARSE(app, argc, argv);

  try {
    if (pre->parsed()) {
      RunConfig cfg = load_config(config_path);
      ov.apply(cfg);
      const auto res = preprocess(cfg);
      std::cout << "clusters " << res.clustering.nc << ", lambda " << res.clustering.lambda << ", theoretical speedup "
                << theoretical_speedup(res.clustering) << '\n'
                << "wrote " << res.partition_files.size() << " partition files to " << cfg.output.string() << '\n';
    } else if (runc->parsed()) {
      RunConfig cfg = load_config(run_config);
      run_ov.apply(cfg);
      if (skip_preprocess) cfg.mode = "run";
      if (cfg.mode == "preprocess") {
        preprocess(cfg);
      } else {
        print_summary(run(cfg));
      }
    } else if (rep->parsed()) {
      report(report_dir, std::cout);
      if (!compare_dir.empty()) {
        const std::filesystem::path out =
            compare_out.empty() ? std::filesystem::path(report_dir) / "misfit.csv" : std::filesystem::path(compare_out);
        std::cout << "max misfit " << compare_runs(report_dir, compare_dir, out) << " (" << out.string() << ")\n";
      }
    } else if (box->parsed()) {
      auto axis = [&](const std::vector<double>& a) {
        return a.size() == 2 && box_cells > 1 ? uniform_axis(a[0], a[1], box_cells) : a;
      };
      BoxSpec spec;
      spec.x = axis(box_x);
      spec.y = axis(box_y);
      spec.z = axis(box_z);
      spec.free_surface_top = free_top;
      const TetMesh mesh = generate_box(spec);
      const auto inf = std::numeric_limits<double>::infinity();
      const std::vector<Material> mats(mesh.elements.size(),
                                       Material::from_velocities(rho, vp, vs, qp > 0 ? qp : inf, qs > 0 ? qs : inf));
      write_mesh(mesh, box_out + ".msh");
      write_materials(box_out + ".mat", mesh, mats);
      std::cout << "wrote " << mesh.num_elements() << " tetrahedra to " << box_out << ".msh\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
