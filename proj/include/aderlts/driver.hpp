#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "aderlts/lts.hpp"
#include "aderlts/partition_comm.hpp"
#include "aderlts/solver.hpp"
#include "aderlts/source_receiver.hpp"

namespace aderlts {

struct ReceiverConfig {
  std::string name;
  Vec3 location{};
};

/// Everything a preprocess or run needs. Paths are absolute after loading.
struct RunConfig {
  std::filesystem::path mesh;
  std::filesystem::path materials;
  std::filesystem::path output = "output";
  int order = 4;
  int precision = 64;        // 32 or 64
  int mechanisms = 0;
  double center_frequency = 1.0;
  int clusters = 1;
  bool optimize_lambda = false;
  double lambda = 1.0;
  double cfl = kDefaultCfl;
  int partitions = 1;
  int width = 1;
  double t_end = 0.0;
  double receiver_interval = 0.0;
  std::vector<PointSource> sources;
  std::vector<ReceiverConfig> receivers;
  std::vector<double> initial_state;  // empty, or 9 constant elastic values
  std::string mode = "both";   // preprocess | run | both
  std::string scheme = "lts";  // lts | gts
  bool threaded = false;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Parses a JSON config; relative paths are resolved against `base_dir`.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);
/// Canonical JSON form (sorted keys, absolute paths).
std::string config_to_json(const RunConfig& cfg);

struct PreprocessResult {
  Clustering clustering;
  TimestepSet timesteps;
  PartitionStats stats;
  std::vector<std::filesystem::path> partition_files;
};

/// Mesh -> CFL -> clusters (+lambda) -> weights -> partitions -> reorder ->
/// partition files plus clustering, timestep and partition reports.
PreprocessResult preprocess(const RunConfig& cfg);

struct RunSummary {
  std::string scheme;
  RunStats stats;
  double theoretical_speedup = 1.0;
  double anelastic_cost_ratio = 0.0;  // kernel cost with / without mechanisms; 0 if elastic
  std::int64_t receivers = 0;
  int seismogram_sets = 0;
};

/// Runs from partition files (mode run) or preprocesses first (mode both).
/// Throws VersionError when the files were made for another order,
/// precision, fusion width or mechanism count.
RunSummary run(const RunConfig& cfg);

/// Lists every file below `dir` with its size and FNV-1a hash.
void write_manifest(const std::filesystem::path& dir);

/// Human-readable digest of an output directory.
void report(const std::filesystem::path& dir, std::ostream& os);

/// Per-receiver, per-channel misfit of `run_dir` against `reference_dir`,
/// written as CSV to `out`. Returns the largest misfit.
double compare_runs(const std::filesystem::path& run_dir, const std::filesystem::path& reference_dir,
                    const std::filesystem::path& out);

/// Seconds per element update of the full kernel chain for the given
/// configuration, measured on a small box.
double measure_update_cost(int order, int mechanisms, int width, int precision, int repetitions = 3);

}  // namespace aderlts
