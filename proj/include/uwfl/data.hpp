#pragma once

// Synthetic non-IID sensor data and benchmark-format ingestion.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "uwfl/autoenc.hpp"
#include "uwfl/rng.hpp"

namespace uwfl {

struct SynthConfig {
  std::size_t n_sensors = 100;
  std::size_t dim = 32;
  std::size_t n_train = 600;
  std::size_t n_val = 200;
  std::size_t n_test = 400;
  std::size_t n_modes = 10;
  double dirichlet_alpha = 1.0;
  double anomaly_rate = 0.05;
  double anomaly_mag_lo = 3.0;  // in units of mode_sigma
  double anomaly_mag_hi = 6.0;
  double mode_sigma = 0.1;
  double anomaly_feature_fraction = 0.25;
  double mean_segment_length = 5.0;
  std::uint64_t seed = 1;
  std::uint64_t anomaly_seed = 1;

  void validate() const;
};

/// One Dirichlet(alpha) weight vector over `n_modes` per sensor.
std::vector<std::vector<double>> dirichlet_partition(std::size_t n_modes, double alpha, std::size_t n_sensors,
                                                     Rng& rng);

/// Gaussian modes with means uniform in [-1,1]^D. Train and validation
/// rows are normal; test rows carry contiguous anomaly segments. Normal
/// draws and anomaly injection use separate streams, so changing only
/// `anomaly_seed` leaves every normal draw unchanged.
std::vector<LocalDataset> synth_generate(const SynthConfig& cfg);

/// Per-feature z-score statistics fitted on a training split.
struct Normalizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  static Normalizer fit(const Matrix& train);
  void apply(Matrix& m) const;
};

/// Fits on train and rescales train, val and test in place.
void normalize(LocalDataset& ds);

struct BenchmarkSpec {
  std::filesystem::path root;
  std::vector<std::string> entities;  // empty: every subdirectory, sorted
  std::size_t dim = 0;                // expected raw feature count; 0 = accept any
  std::size_t window = 1;
  std::size_t stride = 1;
  double val_fraction = 0.2;          // tail of train used when val.csv is absent
};

/// Published feature dimensions of the three reference benchmarks.
inline constexpr std::size_t kSmdDim = 38;
inline constexpr std::size_t kSmapDim = 25;
inline constexpr std::size_t kMslDim = 55;

struct BenchmarkData {
  std::vector<std::string> entities;
  std::vector<LocalDataset> datasets;  // normalized
};

/// Reads <root>/<entity>/{train,test,labels}.csv (and val.csv if present).
BenchmarkData load_benchmark(const BenchmarkSpec& spec);

/// Writes datasets in the benchmark layout (train, val, test, labels).
void write_benchmark(const std::filesystem::path& root, const std::vector<std::string>& entities,
                     const std::vector<LocalDataset>& datasets);

Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
std::vector<std::uint8_t> read_labels_csv(const std::filesystem::path& path);
void write_labels_csv(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels);

/// Stacks overlapping windows of `window` rows into one feature vector;
/// each window is labelled by its last row.
Matrix make_windows(const Matrix& m, std::size_t window, std::size_t stride);
std::vector<std::uint8_t> window_labels(const std::vector<std::uint8_t>& labels, std::size_t window,
                                        std::size_t stride);

}  // namespace uwfl
