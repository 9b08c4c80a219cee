#include "uwfl/channel.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "uwfl/errors.hpp"

namespace uwfl {

namespace {

void require(bool ok, const char* field) {
  if (!ok) throw ConfigError(std::string("acoustic: invalid value for ") + field);
}

}  // namespace

void AcousticParams::validate() const {
  require(carrier_freq_khz > 0, "carrier_freq_khz");
  require(bandwidth_hz > 0, "bandwidth_hz");
  require(spreading_factor >= 1.0 && spreading_factor <= 2.0, "spreading_factor");
  require(sound_speed_mps > 0, "sound_speed_mps");
  require(wind_mps >= 0, "wind_mps");
  require(shipping >= 0 && shipping <= 1, "shipping");
  require(target_snr_db > 0, "target_snr_db");
  require(impl_loss_db >= 0, "impl_loss_db");
  require(sl_max_db > 0, "sl_max_db");
  require(ea_efficiency > 0 && ea_efficiency <= 1, "ea_efficiency");
  require(circuit_tx_w >= 0, "circuit_tx_w");
  require(circuit_rx_w >= 0, "circuit_rx_w");
  require(water_density > 0, "water_density");
  require(ref_pressure > 0, "ref_pressure");
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

double thorp_absorption(double f_khz) {
  if (!(f_khz > 0) || !std::isfinite(f_khz)) throw DomainError("thorp_absorption: frequency must be positive");
  const double f2 = f_khz * f_khz;
  return 0.11 * f2 / (1.0 + f2) + 44.0 * f2 / (4100.0 + f2) + 2.75e-4 * f2 + 0.003;
}

double transmission_loss(double d_m, double f_khz, double k) {
  if (!(d_m >= kReferenceDistanceM)) throw DomainError("transmission_loss: distance below the 1 m reference");
  return 10.0 * k * std::log10(d_m) + thorp_absorption(f_khz) * d_m / 1000.0;
}

NoiseComponents noise_components(double f_khz, double wind_mps, double shipping) {
  if (!(f_khz > 0)) throw DomainError("noise: frequency must be positive");
  if (!(wind_mps >= 0)) throw DomainError("noise: wind speed must be non-negative");
  if (!(shipping >= 0 && shipping <= 1)) throw DomainError("noise: shipping activity must lie in [0,1]");
  const double lf = std::log10(f_khz);
  return {
      17.0 - 30.0 * lf,
      40.0 + 20.0 * (shipping - 0.5) + 26.0 * lf - 60.0 * std::log10(f_khz + 0.03),
      50.0 + 7.5 * std::sqrt(wind_mps) + 20.0 * lf - 40.0 * std::log10(f_khz + 0.4),
      -15.0 + 20.0 * lf,
  };
}

double noise_psd(double f_khz, double wind_mps, double shipping) {
  const auto c = noise_components(f_khz, wind_mps, shipping);
  return linear_to_db(db_to_linear(c.turbulence) + db_to_linear(c.shipping) + db_to_linear(c.wind) +
                      db_to_linear(c.thermal));
}

double noise_level(double f_khz, double bandwidth_hz, double wind_mps, double shipping) {
  if (!(bandwidth_hz > 0)) throw DomainError("noise_level: bandwidth must be positive");
  return noise_psd(f_khz, wind_mps, shipping) + 10.0 * std::log10(bandwidth_hz);
}

double min_source_level(double d_m, const AcousticParams& p) {
  return p.target_snr_db + transmission_loss(d_m, p.carrier_freq_khz, p.spreading_factor) +
         noise_level(p.carrier_freq_khz, p.bandwidth_hz, p.wind_mps, p.shipping) + p.impl_loss_db;
}

double link_rate(const AcousticParams& p) {
  return p.bandwidth_hz * std::log2(1.0 + db_to_linear(p.target_snr_db));
}

double electrical_power(double source_level_db, const AcousticParams& p) {
  const double acoustic = 4.0 * std::numbers::pi * p.ref_pressure * p.ref_pressure /
                          (p.water_density * p.sound_speed_mps) * db_to_linear(source_level_db);
  return acoustic / p.ea_efficiency;
}

LinkBudget link_budget(double d_m, const AcousticParams& p) {
  if (!std::isfinite(d_m) || d_m < 0) throw DomainError("link_budget: distance must be finite and non-negative");
  const double d = d_m < kReferenceDistanceM ? kReferenceDistanceM : d_m;
  LinkBudget lb;
  lb.distance_m = d_m;
  lb.tl_db = transmission_loss(d, p.carrier_freq_khz, p.spreading_factor);
  lb.nl_db = noise_level(p.carrier_freq_khz, p.bandwidth_hz, p.wind_mps, p.shipping);
  lb.sl_min_db = p.target_snr_db + lb.tl_db + lb.nl_db + p.impl_loss_db;
  lb.feasible = lb.sl_min_db <= p.sl_max_db;
  lb.rate_bps = link_rate(p);
  lb.prop_delay_s = d_m / p.sound_speed_mps;
  lb.tx_power_w = electrical_power(lb.sl_min_db, p);
  return lb;
}

double tx_energy(std::uint64_t bits, const LinkBudget& lb, const AcousticParams& p) {
  if (!lb.feasible) throw ProtocolError("tx_energy: transmission on an infeasible link");
  return (lb.tx_power_w + p.circuit_tx_w) * static_cast<double>(bits) / lb.rate_bps;
}

double rx_energy(std::uint64_t bits, const LinkBudget& lb, const AcousticParams& p) {
  if (!lb.feasible) throw ProtocolError("rx_energy: reception on an infeasible link");
  return p.circuit_rx_w * static_cast<double>(bits) / lb.rate_bps;
}

double link_time(std::uint64_t bits, const LinkBudget& lb) {
  return lb.prop_delay_s + static_cast<double>(bits) / lb.rate_bps;
}

double comp_energy(std::uint64_t flops, double eps_op) { return eps_op * static_cast<double>(flops); }

}  // namespace uwfl
