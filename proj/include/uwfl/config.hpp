#pragma once

// Experiment configuration: INI-style sections of key = value pairs.
// Unknown sections and keys are rejected with line-numbered messages.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "uwfl/autoenc.hpp"
#include "uwfl/channel.hpp"
#include "uwfl/compression.hpp"
#include "uwfl/data.hpp"
#include "uwfl/federation.hpp"
#include "uwfl/topology.hpp"

namespace uwfl {

enum class DataSource { Synthetic, Benchmark };

struct ExperimentConfig {
  DeploymentConfig deployment;
  bool auto_fog_count = true;  // n_fogs = max(1, N/10) unless set explicitly
  AcousticParams acoustic;
  ComputeParams compute;
  SgdConfig sgd;
  std::vector<std::size_t> hidden_layers{16, 8, 16};
  MethodSpec method;
  CompressionConfig compression;
  DataSource source = DataSource::Synthetic;
  SynthConfig synth;
  bool normalize_synthetic = false;  // per-sensor z-score
  BenchmarkSpec benchmark;
  MobilityConfig mobility;
  double battery_init = 500.0;
  double battery_min = 0.0;
  std::size_t fog_payload_bits = 0;

  std::size_t rounds = 20;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  double threshold_percentile = 99.0;
  double lambda_energy = 0.0;
  double lambda_latency = 0.0;
  std::filesystem::path output_dir = "results";

  std::vector<MethodKind> grid_methods;        // empty: all methods
  std::vector<std::size_t> grid_sensor_counts;  // empty: deployment.n_sensors

  /// Sets one key; throws ConfigError with the accepted form on bad values.
  void set(std::string_view section, std::string_view key, std::string_view value);
  /// Throws ConfigError naming the first inconsistent field.
  void validate() const;

  std::size_t n_fogs() const;
  /// Layer sizes for feature dimension d: d, hidden..., d.
  std::vector<std::size_t> layer_sizes(std::size_t d) const;
  RoundConfig round_config() const;
};

ExperimentConfig parse_config_text(std::string_view text, std::string_view origin = "<config>");
ExperimentConfig parse_config_file(const std::filesystem::path& path);

/// Parses into an existing config, so a file can be layered over defaults.
void apply_config_text(ExperimentConfig& cfg, std::string_view text, std::string_view origin);

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "UWFL_OUTPUT_DIR";

}  // namespace uwfl
