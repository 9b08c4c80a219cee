#pragma once

// Association, fog cooperation, aggregation and the per-round training
// loop for flat (FedAvg/FedProx) and hierarchical methods.

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "uwfl/autoenc.hpp"
#include "uwfl/channel.hpp"
#include "uwfl/compression.hpp"
#include "uwfl/metrics.hpp"
#include "uwfl/topology.hpp"

namespace uwfl {

enum class MethodKind { Centralised, FedAvg, FedProx, HflNoCoop, HflSelective, HflNearest };

std::string_view method_name(MethodKind kind);
/// Accepts the names produced by method_name. ConfigError lists valid kinds.
MethodKind parse_method(std::string_view name);
std::vector<MethodKind> all_methods();
bool is_hierarchical(MethodKind kind);

struct MethodSpec {
  MethodKind kind = MethodKind::HflSelective;
  double prox_mu = 0.01;  // FedProx only
  std::pair<double, double> nearest_weights{0.7, 0.3};
  std::pair<double, double> selective_weights{0.8, 0.2};
  double selective_distance_quantile = 0.25;
  double small_cluster_factor = 0.75;
  double small_cluster_floor = 2.0;
  std::size_t max_neighbours = 1;  // K

  void validate() const;
};

inline constexpr std::size_t kNoFog = std::numeric_limits<std::size_t>::max();

/// Sensors with a feasible direct gateway link, ascending.
std::vector<std::size_t> associate_flat(const FeasibilityGraph& graph);

/// Per sensor: nearest feasible online fog (ties to the lower index), or
/// kNoFog when the sensor has none and sits the round out.
std::vector<std::size_t> associate_hfl(const FeasibilityGraph& graph);

/// Sensor index lists per fog, each ascending.
std::vector<std::vector<std::size_t>> make_clusters(std::span<const std::size_t> assignments, std::size_t n_fogs);

/// Fog m mixes in the model of `neighbour` with weight `w_neighbour`; its
/// own weight is one minus the sum over its edges.
struct CoopEdge {
  std::size_t fog = 0;
  std::size_t neighbour = 0;
  double w_neighbour = 0.0;
  friend bool operator==(const CoopEdge&, const CoopEdge&) = default;
};

/// Every online fog pairs with its K nearest feasible online fogs.
std::vector<CoopEdge> coop_select_nearest(const FeasibilityGraph& graph, const MethodSpec& spec);

/// A non-empty fog is eligible when c_m <= max(floor, factor * mean size of
/// non-empty clusters). It links to its K nearest feasible online fogs with
/// a strictly larger cluster at a distance no greater than the quantile of
/// all feasible fog-fog distances.
std::vector<CoopEdge> coop_select_selective(const FeasibilityGraph& graph, std::span<const std::size_t> cluster_sizes,
                                            const MethodSpec& spec);

/// Nearest-rank quantile of the feasible fog-fog distances over unordered
/// pairs; +inf when no pair is feasible.
double fog_distance_quantile(const FeasibilityGraph& graph, double q);

struct ClusterUpdate {
  std::vector<double> delta;
  std::uint64_t n_samples = 0;
};

/// theta + sum_i n_i / sum_k n_k * delta_i. Throws DomainError when empty.
ModelParams fog_aggregate(const ModelParams& theta, std::span<const ClusterUpdate> updates);

/// theta~_m = (1 - sum w) theta_m + sum w theta_j over m's edges.
std::vector<ModelParams> coop_mix(std::span<const ModelParams> models, std::span<const CoopEdge> edges);

/// Data-weighted mean of fog models; fogs with zero weight are skipped.
ModelParams global_aggregate(std::span<const ModelParams> models, std::span<const std::uint64_t> cluster_samples);

struct RoundConfig {
  AcousticParams acoustic;
  ComputeParams compute;
  SgdConfig sgd;
  CompressionConfig compression;
  MethodSpec method;
  std::size_t fog_payload_bits = 0;  // L_f and L_g; 0 = 32 d
  double battery_init = 500.0;
  double battery_min = 0.0;
};

struct FederationState {
  ModelParams global;
  std::vector<ErrorBuffer> buffers;
  BatteryState battery;
  std::size_t round = 0;  // rounds completed

  FederationState() = default;
  FederationState(ModelParams init, std::size_t n_sensors, double e_init, double e_min);
};

/// What happened inside one round, for tests and diagnostics.
struct RoundTrace {
  std::vector<std::size_t> active;       // sensors that uploaded
  std::vector<std::size_t> assignments;  // HFL only
  std::vector<std::vector<std::size_t>> clusters;
  std::vector<CoopEdge> edges;
  std::vector<std::size_t> battery_skipped;
};

/// One round of Algorithm-1 style training. Local training runs across
/// sensors on OpenMP threads or serially; results are identical.
RoundReport run_round(FederationState& state, const FeasibilityGraph& graph, std::span<const LocalDataset> datasets,
                      const RoundConfig& cfg, std::uint64_t seed, Execution exec = Execution::Parallel,
                      RoundTrace* trace = nullptr);

/// Route of a raw-data upload in the centralised baseline.
struct CentralisedRoute {
  std::vector<std::size_t> direct;                              // sensor -> gateway
  std::vector<std::pair<std::size_t, std::size_t>> relayed;     // (sensor, fog)
};

/// Direct when the gateway link is feasible, else via the nearest feasible
/// online fog, else excluded.
CentralisedRoute centralised_route(const FeasibilityGraph& graph);

struct CentralisedResult {
  ModelParams params;
  std::vector<RoundReport> reports;
  std::vector<std::size_t> included;
};

/// Pools every reachable sensor's training data at the gateway and trains
/// one model for rounds * epochs epochs. Raw data (32 D bits per training
/// sample) is charged once, in the first round.
CentralisedResult run_centralised(const ModelParams& init, const FeasibilityGraph& graph,
                                  std::span<const LocalDataset> datasets, const RoundConfig& cfg, std::size_t rounds,
                                  std::uint64_t seed);

}  // namespace uwfl
