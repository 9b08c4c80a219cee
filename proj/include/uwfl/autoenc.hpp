#pragma once

// Symmetric fully connected autoencoder used as the anomaly detector.
//
// Parameters live in one flat vector so that compression indices are
// portable between nodes. Canonical order, layer by layer:
//   W_l (n_out x n_in, row-major: W[o * n_in + i]), then b_l (n_out).
// Hidden layers apply ReLU; the output layer is affine.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "uwfl/matrix.hpp"
#include "uwfl/rng.hpp"

namespace uwfl {

inline const std::vector<std::size_t> kDefaultLayerSizes{32, 16, 8, 16, 32};

struct ModelParams {
  std::vector<std::size_t> layer_sizes;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Sum over layers of n_in * n_out + n_out. Throws for fewer than two sizes.
std::size_t param_count(std::span<const std::size_t> layer_sizes);

struct LocalDataset {
  Matrix train;
  Matrix val;
  Matrix test;
  std::vector<std::uint8_t> test_labels;  // 1 = anomalous

  std::size_t dim() const { return train.cols; }
  std::size_t n_samples() const { return train.rows; }
};

struct SgdConfig {
  std::size_t epochs = 5;
  double lr = 0.01;
  std::size_t batch_size = 32;
  double prox_mu = 0.0;  // 0 = plain local SGD

  void validate() const;
};

/// Glorot-uniform weights, zero biases.
ModelParams init_params(std::span<const std::size_t> layer_sizes, Rng& rng);

ModelParams zero_params(std::span<const std::size_t> layer_sizes);

std::vector<double> forward(const ModelParams& params, std::span<const double> x);

/// Mean over rows of ||x - h(x)||^2.
double loss(const ModelParams& params, const Matrix& batch);

/// Exact gradient of `loss`; ReLU derivative at 0 is taken as 0.
std::vector<double> gradient(const ModelParams& params, const Matrix& batch);

struct LocalResult {
  ModelParams params;
  std::uint64_t flops = 0;
  std::uint64_t samples_seen = 0;
  double last_epoch_loss = 0.0;  // sample-weighted mean of mini-batch losses
};

/// FLOP count charged for one sample pass (forward + backward).
std::uint64_t training_flops(std::size_t d_params, std::uint64_t samples_seen);

/// E epochs of shuffled mini-batch SGD from `start`. With prox_mu > 0 every
/// step adds mu (theta - start) to the gradient. Throws NumericError if the
/// loss stops being finite.
LocalResult local_sgd(const ModelParams& start, const Matrix& train, const SgdConfig& cfg, Rng& rng);

/// Per-row squared reconstruction error.
std::vector<double> scores(const ModelParams& params, const Matrix& samples, Execution exec = Execution::Parallel);

/// Nearest-rank percentile: sorted ascending, 1-based rank ceil(p/100 n).
double calibrate_threshold(std::span<const double> errors, double p);

/// Strictly greater than the threshold.
std::vector<std::uint8_t> flag(std::span<const double> scores, double threshold);

/// Writes <stem>.bin (little-endian float64 values) and <stem>.json.
void save_params(const ModelParams& params, const std::filesystem::path& stem);
ModelParams load_params(const std::filesystem::path& stem);

}  // namespace uwfl
