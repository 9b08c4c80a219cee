#pragma once

// Single runs and method x scale x seed grids, with their output files.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "uwfl/config.hpp"
#include "uwfl/metrics.hpp"

namespace uwfl {

struct Evaluation {
  double threshold = 0.0;
  DetectionResult point;
  DetectionResult adjusted;       // pooled over entities that contain anomalies
  std::size_t adjusted_entities = 0;
  double initial_loss = 0.0;      // data-weighted training loss of the initial model
  double final_loss = 0.0;
};

struct RunResult {
  MethodKind method = MethodKind::FedAvg;
  std::size_t n_sensors = 0;
  std::size_t n_fogs = 0;
  std::uint64_t seed = 0;
  double direct_reachability = 0.0;
  double fog_reachability = 0.0;
  std::vector<RoundReport> reports;
  ModelParams model;
  Evaluation eval;
};

/// Everything one cell needs: topology, graph, data and initial model are
/// all derived from `seed`, so different methods on the same seed see the
/// same deployment and data.
RunResult run_experiment(const ExperimentConfig& cfg, MethodKind method, std::size_t n_sensors, std::uint64_t seed,
                         Execution exec = Execution::Parallel);

/// Global threshold from pooled validation errors, pooled test counts.
Evaluation evaluate(const ModelParams& init, const ModelParams& model, std::span<const LocalDataset> datasets,
                    double percentile, Execution exec = Execution::Parallel);

/// Summary JSON text (sorted keys, trailing newline).
std::string summary_json(const RunResult& run, const ExperimentConfig& cfg);

/// Writes rounds.csv and summary.json into `dir`.
void write_run(const RunResult& run, const ExperimentConfig& cfg, const std::filesystem::path& dir);

/// Directory name of a grid cell, e.g. "hfl-selective_n200_s3".
std::string cell_name(MethodKind method, std::size_t n_sensors, std::uint64_t seed);

struct GridCell {
  MethodKind method;
  std::size_t n_sensors;
  std::uint64_t seed;
};

std::vector<GridCell> grid_cells(const ExperimentConfig& cfg);

struct GridOutcome {
  std::size_t completed = 0;
  std::vector<std::pair<GridCell, std::string>> failures;
  bool ok() const { return failures.empty(); }
};

/// Runs every cell on up to `jobs` worker threads and writes
///   <out>/cells/<cell>/{rounds.csv,summary.json}
///   <out>/grid_runs.csv     one row per cell
///   <out>/grid_summary.csv  mean and sample std over seeds per (method, N)
///   <out>/failures.json     failed cells with their error messages
/// Output bytes do not depend on `jobs`.
GridOutcome run_grid(const ExperimentConfig& cfg, std::size_t jobs, std::ostream* log = nullptr);

/// Columns shared by grid_runs.csv and the mean/std pairs of grid_summary.csv.
const std::vector<std::string>& grid_metric_names();
std::vector<double> grid_metrics(const RunResult& run);

struct ReachRow {
  std::size_t n_sensors, n_fogs;
  std::uint64_t seed;
  double direct, fog;
};

/// Topology-only Monte Carlo of direct and fog-path reachability.
std::vector<ReachRow> reach_study(const ExperimentConfig& cfg, const std::vector<std::size_t>& sensor_counts,
                                  const std::vector<std::uint64_t>& seeds);
std::string reach_csv(const std::vector<ReachRow>& rows);

/// The deployment used by run_experiment for a given scale and seed.
Topology make_topology(const ExperimentConfig& cfg, std::size_t n_sensors, std::uint64_t seed);
DeploymentConfig deployment_for(const ExperimentConfig& cfg, std::size_t n_sensors, std::uint64_t seed);

}  // namespace uwfl
