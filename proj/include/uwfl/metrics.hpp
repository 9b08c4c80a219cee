#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace uwfl {

/// One row of the per-run rounds CSV.
struct RoundReport {
  std::size_t round = 0;
  double e_s2f = 0;   // sensor uplink (to fog, or to the gateway for flat methods)
  double e_f2f = 0;
  double e_f2g = 0;
  double e_rx = 0;
  double e_comp = 0;
  double e_round = 0;  // e_s2f + e_f2f + e_f2g
  double e_total = 0;  // e_round + e_rx + e_comp
  double latency_s = 0;
  double participation = 0;
  double mean_train_loss = 0;
  double battery_min = 0;
  double battery_mean = 0;
  std::uint64_t payload_bits_total = 0;

  /// Recomputes e_round and e_total from the components.
  void close_totals();
};

/// Per-sensor residual energy.
struct BatteryState {
  std::vector<double> residual;
  double e_init = 500.0;
  double e_min = 0.0;

  BatteryState() = default;
  BatteryState(std::size_t n, double init, double min) : residual(n, init), e_init(init), e_min(min) {}

  bool can_afford(std::size_t i, double cost) const { return residual[i] - cost >= e_min; }
  double min() const;
  double mean() const;
};

/// Subtracts costs elementwise; returns indices that ended below e_min.
std::vector<std::size_t> battery_step(BatteryState& state, std::span<const double> costs);

/// Max over tiers of the slowest link time, plus local compute time.
/// Each tier entry is d/c + L/R for one transmission.
double round_latency(std::span<const double> sensor_tier, std::span<const double> fog_tier,
                     std::span<const double> gateway_tier, double comp_time_s);

struct DetectionResult {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::uint64_t tp = 0, fp = 0, fn = 0;
};

/// Precision/recall/F1 from counts. No predictions and no positives gives
/// 1.0 across the board; no predictions with positives gives F1 = 0.
DetectionResult detection_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn);

DetectionResult f1_point(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> labels);

/// Any hit inside a maximal run of positive labels credits the whole run.
std::vector<std::uint8_t> point_adjust(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> labels);

DetectionResult f1_point_adjusted(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> labels);

/// F(theta_T) + lambda_E sum E + lambda_tau sum tau. Reported, never optimised.
double objective_value(double final_loss, std::span<const double> energy, std::span<const double> latency,
                       double lambda_e, double lambda_tau);

}  // namespace uwfl
