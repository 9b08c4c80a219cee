#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "uwfl/channel.hpp"
#include "uwfl/rng.hpp"

namespace uwfl {

struct Vec3 {
  double x = 0, y = 0, z = 0;
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

double distance(const Vec3& a, const Vec3& b);

struct DepthRange {
  double min = 0, max = 0;
};

struct DeploymentConfig {
  double lx_m = 2000.0;
  double ly_m = 2000.0;
  double h_m = 1000.0;
  std::size_t n_sensors = 100;
  std::size_t n_fogs = 10;
  DepthRange sensor_depth{500.0, 1000.0};
  DepthRange fog_depth{100.0, 400.0};
  double gateway_x = 1000.0;
  double gateway_y = 1000.0;
  std::uint64_t seed = 1;

  void validate() const;
};

/// M = N/10, at least one fog.
std::size_t default_fog_count(std::size_t n_sensors);

struct Topology {
  std::vector<Vec3> sensors;
  std::vector<Vec3> fogs;
  Vec3 gateway;
  std::uint64_t seed = 0;

  friend bool operator==(const Topology&, const Topology&) = default;
};

/// Per-round feasibility graph. Matrices are row-major.
class FeasibilityGraph {
public:
  FeasibilityGraph() = default;
  FeasibilityGraph(std::size_t n_sensors, std::size_t n_fogs);

  std::size_t n_sensors() const { return n_sensors_; }
  std::size_t n_fogs() const { return n_fogs_; }

  LinkBudget& s2f(std::size_t i, std::size_t m) { return s2f_[i * n_fogs_ + m]; }
  const LinkBudget& s2f(std::size_t i, std::size_t m) const { return s2f_[i * n_fogs_ + m]; }
  LinkBudget& f2f(std::size_t m, std::size_t j) { return f2f_[m * n_fogs_ + j]; }
  const LinkBudget& f2f(std::size_t m, std::size_t j) const { return f2f_[m * n_fogs_ + j]; }
  LinkBudget& s2g(std::size_t i) { return s2g_[i]; }
  const LinkBudget& s2g(std::size_t i) const { return s2g_[i]; }
  LinkBudget& f2g(std::size_t m) { return f2g_[m]; }
  const LinkBudget& f2g(std::size_t m) const { return f2g_[m]; }

  /// A fog is online when its gateway uplink is feasible. Offline fogs can
  /// neither forward a cluster model nor take part in cooperation.
  bool fog_online(std::size_t m) const { return f2g_[m].feasible; }

private:
  std::size_t n_sensors_ = 0;
  std::size_t n_fogs_ = 0;
  std::vector<LinkBudget> s2f_;
  std::vector<LinkBudget> f2f_;
  std::vector<LinkBudget> s2g_;
  std::vector<LinkBudget> f2g_;
};

Topology deploy(const DeploymentConfig& config, Rng& rng);

/// Budgets for every pair. The parallel path splits rows across OpenMP
/// threads; the serial path is the reference implementation.
FeasibilityGraph build_graph(const Topology& topo, const AcousticParams& params,
                             Execution exec = Execution::Parallel);

/// Fraction of sensors with a feasible direct gateway link.
double direct_reachability(const FeasibilityGraph& graph);

/// Fraction of sensors with a feasible two-hop path: a feasible link to at
/// least one fog whose own gateway uplink is feasible.
double fog_reachability(const FeasibilityGraph& graph);

struct MobilityConfig {
  bool enabled = false;
  double mean_speed_mps = 0.5;
  double memory_alpha = 0.75;
  double speed_stddev_mps = 0.1;  // per axis, stationary deviation from the mean velocity
  double dt_s = 60.0;             // time between rounds
};

/// Gauss-Markov state for the fog layer: one velocity and one mean
/// velocity (horizontal heading at mean speed) per fog.
struct FogMotion {
  std::vector<Vec3> velocity;
  std::vector<Vec3> mean_velocity;
};

FogMotion init_fog_motion(std::size_t n_fogs, const MobilityConfig& mobility, Rng& rng);

/// v' = a v + (1-a) mean + sqrt(1-a^2) sigma n,  p' = clamp(p + v' dt).
/// Positions are clamped to the volume and the fog stratum.
void gauss_markov_step(std::vector<Vec3>& fog_pos, FogMotion& motion, const MobilityConfig& mobility,
                       const DeploymentConfig& bounds, Rng& rng);

std::string topology_to_json(const Topology& topo);
Topology topology_from_json(const std::string& text);

}  // namespace uwfl
