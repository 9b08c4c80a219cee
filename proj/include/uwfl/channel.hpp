#pragma once

// Underwater acoustic link model: Thorp absorption, practical spreading,
// Wenz-type ambient noise, capped-source-level feasibility and the
// per-transmission energy model.

#include <cstdint>

namespace uwfl {

struct AcousticParams {
  double carrier_freq_khz = 12.0;
  double bandwidth_hz = 4000.0;
  double spreading_factor = 1.5;
  double sound_speed_mps = 1500.0;
  double wind_mps = 5.0;
  double shipping = 0.5;
  double target_snr_db = 10.0;
  double impl_loss_db = 2.0;
  double sl_max_db = 140.0;  // dB re 1 uPa @ 1 m
  double ea_efficiency = 0.25;
  double circuit_tx_w = 0.05;
  double circuit_rx_w = 0.03;
  double water_density = 1025.0;
  double ref_pressure = 1e-6;  // Pa

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

/// Local-computation cost model. Neither constant is published for the
/// reference system; both are configurable.
struct ComputeParams {
  double eps_op_j = 1e-9;          // J per FLOP
  double flops_per_s = 1e8;        // local compute throughput
};

struct LinkBudget {
  double distance_m = 0.0;
  double tl_db = 0.0;
  double nl_db = 0.0;
  double sl_min_db = 0.0;
  bool feasible = false;
  double rate_bps = 0.0;
  double prop_delay_s = 0.0;
  double tx_power_w = 0.0;  // electrical, P_ac / eta_ea
};

/// Individual ambient-noise components in dB re 1 uPa^2/Hz.
struct NoiseComponents {
  double turbulence;
  double shipping;
  double wind;
  double thermal;
};

inline constexpr double kReferenceDistanceM = 1.0;

double db_to_linear(double db);
double linear_to_db(double linear);

/// Thorp absorption in dB/km; f in kHz.
double thorp_absorption(double f_khz);

/// TL(d, f) = 10 k log10(d) + alpha(f) d / 1000. Throws for d below 1 m.
double transmission_loss(double d_m, double f_khz, double k);

NoiseComponents noise_components(double f_khz, double wind_mps, double shipping);

/// Power sum of the four Wenz components.
double noise_psd(double f_khz, double wind_mps, double shipping);

double noise_level(double f_khz, double bandwidth_hz, double wind_mps, double shipping);

/// Minimum source level that reaches the target SNR at distance d.
double min_source_level(double d_m, const AcousticParams& params);

/// Shannon-type rate at the target SNR; independent of distance.
double link_rate(const AcousticParams& params);

/// Electrical transmit power needed to radiate the given source level.
double electrical_power(double source_level_db, const AcousticParams& params);

/// Full budget for a link of length d. Distances below the 1 m reference
/// are clamped to it. Infeasible links are reported with feasible=false.
LinkBudget link_budget(double d_m, const AcousticParams& params);

/// (P_tx + P_c,tx) * bits / R. Throws ProtocolError on infeasible links.
double tx_energy(std::uint64_t bits, const LinkBudget& lb, const AcousticParams& params);

/// P_c,rx * bits / R. Throws ProtocolError on infeasible links.
double rx_energy(std::uint64_t bits, const LinkBudget& lb, const AcousticParams& params);

/// Serialization plus propagation time of one transmission.
double link_time(std::uint64_t bits, const LinkBudget& lb);

double comp_energy(std::uint64_t flops, double eps_op);

}  // namespace uwfl
