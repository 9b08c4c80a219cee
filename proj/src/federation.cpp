#include "uwfl/federation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>

#include "uwfl/errors.hpp"

namespace uwfl {

namespace {

constexpr std::array<std::pair<MethodKind, std::string_view>, 6> kMethodNames{{
    {MethodKind::Centralised, "centralised"},
    {MethodKind::FedAvg, "fedavg"},
    {MethodKind::FedProx, "fedprox"},
    {MethodKind::HflNoCoop, "hfl-nocoop"},
    {MethodKind::HflSelective, "hfl-selective"},
    {MethodKind::HflNearest, "hfl-nearest"},
}};

bool valid_weights(const std::pair<double, double>& w) {
  return w.first >= 0 && w.second >= 0 && std::abs(w.first + w.second - 1.0) < 1e-12;
}

}  // namespace

std::string_view method_name(MethodKind kind) {
  for (const auto& [k, name] : kMethodNames)
    if (k == kind) return name;
  throw DomainError("method_name: unknown kind");
}

MethodKind parse_method(std::string_view name) {
  for (const auto& [k, n] : kMethodNames)
    if (n == name) return k;
  std::string valid;
  for (const auto& [k, n] : kMethodNames) {
    if (!valid.empty()) valid += ", ";
    valid += n;
  }
  throw ConfigError("unknown method '" + std::string(name) + "' (valid: " + valid + ")");
}

std::vector<MethodKind> all_methods() {
  std::vector<MethodKind> out;
  for (const auto& entry : kMethodNames) out.push_back(entry.first);
  return out;
}

bool is_hierarchical(MethodKind kind) {
  return kind == MethodKind::HflNoCoop || kind == MethodKind::HflSelective || kind == MethodKind::HflNearest;
}

void MethodSpec::validate() const {
  if (!(prox_mu >= 0)) throw ConfigError("method: prox_mu must be >= 0");
  if (!valid_weights(nearest_weights)) throw ConfigError("method: nearest_weights must be nonnegative and sum to 1");
  if (!valid_weights(selective_weights)) throw ConfigError("method: selective_weights must be nonnegative and sum to 1");
  if (!(selective_distance_quantile > 0 && selective_distance_quantile <= 1))
    throw ConfigError("method: selective_distance_quantile must lie in (0, 1]");
  if (!(small_cluster_factor >= 0)) throw ConfigError("method: small_cluster_factor must be >= 0");
  if (!(small_cluster_floor >= 0)) throw ConfigError("method: small_cluster_floor must be >= 0");
}

std::vector<std::size_t> associate_flat(const FeasibilityGraph& graph) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < graph.n_sensors(); ++i)
    if (graph.s2g(i).feasible) out.push_back(i);
  return out;
}

std::vector<std::size_t> associate_hfl(const FeasibilityGraph& graph) {
  std::vector<std::size_t> out(graph.n_sensors(), kNoFog);
  for (std::size_t i = 0; i < graph.n_sensors(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < graph.n_fogs(); ++m) {
      const auto& lb = graph.s2f(i, m);
      if (lb.feasible && graph.fog_online(m) && lb.distance_m < best) {
        best = lb.distance_m;
        out[i] = m;
      }
    }
  }
  return out;
}

std::vector<std::vector<std::size_t>> make_clusters(std::span<const std::size_t> assignments, std::size_t n_fogs) {
  std::vector<std::vector<std::size_t>> out(n_fogs);
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == kNoFog) continue;
    if (assignments[i] >= n_fogs) throw DomainError("make_clusters: fog index out of range");
    out[assignments[i]].push_back(i);
  }
  return out;
}

namespace {

// Up to k feasible online neighbours of m accepted by `keep`, nearest first.
template <class Pred>
std::vector<std::size_t> nearest_neighbours(const FeasibilityGraph& graph, std::size_t m, std::size_t k, Pred keep) {
  std::vector<std::size_t> cand;
  for (std::size_t j = 0; j < graph.n_fogs(); ++j)
    if (j != m && graph.fog_online(j) && graph.f2f(m, j).feasible && keep(j)) cand.push_back(j);
  std::stable_sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) {
    return graph.f2f(m, a).distance_m < graph.f2f(m, b).distance_m;
  });
  if (cand.size() > k) cand.resize(k);
  return cand;
}

void emit_edges(std::vector<CoopEdge>& out, std::size_t m, const std::vector<std::size_t>& nbrs, double w_total) {
  for (auto j : nbrs) out.push_back({m, j, w_total / static_cast<double>(nbrs.size())});
}

}  // namespace

std::vector<CoopEdge> coop_select_nearest(const FeasibilityGraph& graph, const MethodSpec& spec) {
  std::vector<CoopEdge> out;
  if (spec.max_neighbours == 0) return out;
  for (std::size_t m = 0; m < graph.n_fogs(); ++m) {
    if (!graph.fog_online(m)) continue;
    const auto nbrs = nearest_neighbours(graph, m, spec.max_neighbours, [](std::size_t) { return true; });
    emit_edges(out, m, nbrs, spec.nearest_weights.second);
  }
  return out;
}

double fog_distance_quantile(const FeasibilityGraph& graph, double q) {
  std::vector<double> d;
  for (std::size_t m = 0; m < graph.n_fogs(); ++m)
    for (std::size_t j = m + 1; j < graph.n_fogs(); ++j)
      if (graph.f2f(m, j).feasible) d.push_back(graph.f2f(m, j).distance_m);
  if (d.empty()) return std::numeric_limits<double>::infinity();
  std::sort(d.begin(), d.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(d.size())));
  return d[std::clamp<std::size_t>(rank, 1, d.size()) - 1];
}

std::vector<CoopEdge> coop_select_selective(const FeasibilityGraph& graph, std::span<const std::size_t> cluster_sizes,
                                            const MethodSpec& spec) {
  if (cluster_sizes.size() != graph.n_fogs()) throw DomainError("coop_select_selective: one size per fog expected");
  std::vector<CoopEdge> out;
  if (spec.max_neighbours == 0) return out;
  double sum = 0.0;
  std::size_t non_empty = 0;
  for (auto c : cluster_sizes)
    if (c > 0) {
      sum += static_cast<double>(c);
      ++non_empty;
    }
  if (non_empty == 0) return out;
  const double threshold = std::max(spec.small_cluster_floor, spec.small_cluster_factor * sum / static_cast<double>(non_empty));
  const double d_max = fog_distance_quantile(graph, spec.selective_distance_quantile);

  for (std::size_t m = 0; m < graph.n_fogs(); ++m) {
    const auto c_m = cluster_sizes[m];
    if (c_m == 0 || !graph.fog_online(m) || static_cast<double>(c_m) > threshold) continue;
    const auto nbrs = nearest_neighbours(graph, m, spec.max_neighbours, [&](std::size_t j) {
      return cluster_sizes[j] > c_m && graph.f2f(m, j).distance_m <= d_max;
    });
    emit_edges(out, m, nbrs, spec.selective_weights.second);
  }
  return out;
}

ModelParams fog_aggregate(const ModelParams& theta, std::span<const ClusterUpdate> updates) {
  if (updates.empty()) throw DomainError("fog_aggregate: empty cluster");
  std::uint64_t total = 0;
  for (const auto& u : updates) {
    if (u.delta.size() != theta.size()) throw DomainError("fog_aggregate: update length mismatch");
    total += u.n_samples;
  }
  if (total == 0) throw DomainError("fog_aggregate: cluster holds no samples");
  ModelParams out = theta;
  for (const auto& u : updates) {
    const double w = static_cast<double>(u.n_samples) / static_cast<double>(total);
    for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] += w * u.delta[k];
  }
  return out;
}

std::vector<ModelParams> coop_mix(std::span<const ModelParams> models, std::span<const CoopEdge> edges) {
  std::vector<ModelParams> out(models.begin(), models.end());
  std::vector<double> self_w(models.size(), 1.0);
  for (const auto& e : edges) {
    if (e.fog >= models.size() || e.neighbour >= models.size()) throw DomainError("coop_mix: edge out of range");
    if (e.w_neighbour < 0) throw DomainError("coop_mix: negative mixing weight");
    self_w[e.fog] -= e.w_neighbour;
  }
  for (std::size_t m = 0; m < models.size(); ++m) {
    if (self_w[m] < -1e-12) throw DomainError("coop_mix: mixing weights exceed 1");
    if (self_w[m] == 1.0) continue;
    for (auto& v : out[m].values) v *= self_w[m];
  }
  for (const auto& e : edges) {
    auto& dst = out[e.fog].values;
    const auto& src = models[e.neighbour].values;
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += e.w_neighbour * src[k];
  }
  return out;
}

ModelParams global_aggregate(std::span<const ModelParams> models, std::span<const std::uint64_t> cluster_samples) {
  if (models.size() != cluster_samples.size()) throw DomainError("global_aggregate: one weight per model expected");
  std::uint64_t total = 0;
  for (auto n : cluster_samples) total += n;
  if (total == 0) throw DomainError("global_aggregate: no data-bearing fog");
  ModelParams out;
  for (std::size_t m = 0; m < models.size(); ++m) {
    if (cluster_samples[m] == 0) continue;
    if (out.values.empty()) {
      out.layer_sizes = models[m].layer_sizes;
      out.values.assign(models[m].size(), 0.0);
    }
    const double w = static_cast<double>(cluster_samples[m]) / static_cast<double>(total);
    for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] += w * models[m].values[k];
  }
  return out;
}

FederationState::FederationState(ModelParams init, std::size_t n_sensors, double e_init, double e_min)
    : global(std::move(init)), buffers(n_sensors, ErrorBuffer(global.size())), battery(n_sensors, e_init, e_min) {}

namespace {

struct SensorOutcome {
  CompressedUpdate upload;
  std::uint64_t flops = 0;
  double last_loss = 0.0;
};

// Local training and compression for every listed sensor. Each sensor owns
// its RNG stream and error buffer, so the schedule cannot change results.
std::vector<SensorOutcome> train_sensors(FederationState& state, std::span<const std::size_t> sensors,
                                         std::span<const LocalDataset> datasets, const RoundConfig& cfg,
                                         const SgdConfig& sgd, std::uint64_t seed, Execution exec) {
  std::vector<SensorOutcome> out(sensors.size());
  std::vector<std::exception_ptr> errors(sensors.size());
  auto work = [&](std::size_t k) {
    try {
      const std::size_t i = sensors[k];
      auto rng = make_rng(seed, {kStreamTrain, state.round, i});
      auto local = local_sgd(state.global, datasets[i].train, sgd, rng);
      std::vector<double> delta(local.params.size());
      for (std::size_t p = 0; p < delta.size(); ++p) delta[p] = local.params.values[p] - state.global.values[p];
      out[k].upload = compress(delta, state.buffers[i], cfg.compression, datasets[i].n_samples());
      out[k].flops = local.flops;
      out[k].last_loss = local.last_epoch_loss;
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };
  const auto n = static_cast<std::ptrdiff_t>(sensors.size());
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t k = 0; k < n; ++k) work(static_cast<std::size_t>(k));
  } else {
    for (std::ptrdiff_t k = 0; k < n; ++k) work(static_cast<std::size_t>(k));
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

std::uint64_t fog_bits(const RoundConfig& cfg, std::size_t d) {
  return cfg.fog_payload_bits ? cfg.fog_payload_bits : 32ULL * d;
}

double sample_weighted_loss(std::span<const SensorOutcome> outcomes, std::span<const std::size_t> sensors,
                            std::span<const LocalDataset> datasets) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < sensors.size(); ++k) {
    const auto n = static_cast<double>(datasets[sensors[k]].n_samples());
    num += n * outcomes[k].last_loss;
    den += n;
  }
  return den > 0 ? num / den : 0.0;
}

}  // namespace

RoundReport run_round(FederationState& state, const FeasibilityGraph& graph, std::span<const LocalDataset> datasets,
                      const RoundConfig& cfg, std::uint64_t seed, Execution exec, RoundTrace* trace) {
  const MethodKind kind = cfg.method.kind;
  if (kind == MethodKind::Centralised) throw ProtocolError("run_round: the centralised baseline has its own driver");
  const std::size_t n = graph.n_sensors();
  if (datasets.size() != n || state.buffers.size() != n || state.battery.residual.size() != n)
    throw DomainError("run_round: sensor count mismatch between graph, data and state");
  const std::size_t d = state.global.size();
  const bool hfl = is_hierarchical(kind);

  SgdConfig sgd = cfg.sgd;
  sgd.prox_mu = kind == MethodKind::FedProx ? cfg.method.prox_mu : 0.0;

  // Association: sensor uplink budget per candidate.
  std::vector<std::size_t> assignments;
  std::vector<std::size_t> candidates;
  if (hfl) {
    assignments = associate_hfl(graph);
    for (std::size_t i = 0; i < n; ++i)
      if (assignments[i] != kNoFog) candidates.push_back(i);
  } else {
    candidates = associate_flat(graph);
  }
  auto uplink = [&](std::size_t i) -> const LinkBudget& { return hfl ? graph.s2f(i, assignments[i]) : graph.s2g(i); };

  // Sensors that cannot pay for this round keep their battery and skip it.
  const std::uint64_t up_bits = upload_bits(cfg.compression, d);
  std::vector<std::size_t> active, skipped;
  for (auto i : candidates) {
    const auto samples = static_cast<std::uint64_t>(sgd.epochs) * datasets[i].n_samples();
    const double cost = tx_energy(up_bits, uplink(i), cfg.acoustic) +
                        comp_energy(training_flops(d, samples), cfg.compute.eps_op_j);
    if (state.battery.can_afford(i, cost)) {
      active.push_back(i);
    } else {
      skipped.push_back(i);
      if (hfl) assignments[i] = kNoFog;
    }
  }

  RoundReport rep;
  rep.round = state.round + 1;
  rep.participation = n ? static_cast<double>(active.size()) / static_cast<double>(n) : 0.0;

  const auto outcomes = train_sensors(state, active, datasets, cfg, sgd, seed, exec);

  std::vector<double> costs(n, 0.0), sensor_times, fog_times, gateway_times;
  double comp_time = 0.0;
  for (std::size_t k = 0; k < active.size(); ++k) {
    const std::size_t i = active[k];
    const auto& lb = uplink(i);
    const auto bits = outcomes[k].upload.payload_bits;
    const double e_tx = tx_energy(bits, lb, cfg.acoustic);
    const double e_cp = comp_energy(outcomes[k].flops, cfg.compute.eps_op_j);
    rep.e_s2f += e_tx;
    rep.e_rx += rx_energy(bits, lb, cfg.acoustic);
    rep.e_comp += e_cp;
    rep.payload_bits_total += bits;
    costs[i] = e_tx + e_cp;
    sensor_times.push_back(link_time(bits, lb));
    comp_time = std::max(comp_time, static_cast<double>(outcomes[k].flops) / cfg.compute.flops_per_s);
  }
  rep.mean_train_loss = sample_weighted_loss(outcomes, active, datasets);

  if (!active.empty()) {
    if (!hfl) {
      std::vector<ClusterUpdate> ups(active.size());
      for (std::size_t k = 0; k < active.size(); ++k) {
        ups[k].delta = outcomes[k].upload.to_dense();
        ups[k].n_samples = outcomes[k].upload.n_samples;
      }
      state.global = fog_aggregate(state.global, ups);
    } else {
      const std::size_t m_count = graph.n_fogs();
      auto clusters = make_clusters(assignments, m_count);
      std::vector<std::size_t> slot(n, 0);
      for (std::size_t k = 0; k < active.size(); ++k) slot[active[k]] = k;

      // Online fogs always forward a model; an empty cluster forwards theta^t.
      std::vector<ModelParams> fog_models(m_count, state.global);
      std::vector<std::uint64_t> cluster_samples(m_count, 0);
      for (std::size_t m = 0; m < m_count; ++m) {
        if (clusters[m].empty()) continue;
        std::vector<ClusterUpdate> ups;
        for (auto i : clusters[m]) {
          const auto& up = outcomes[slot[i]].upload;
          ups.push_back({up.to_dense(), up.n_samples});
          cluster_samples[m] += up.n_samples;
        }
        fog_models[m] = fog_aggregate(state.global, ups);
      }

      std::vector<CoopEdge> edges;
      if (kind == MethodKind::HflNearest) {
        edges = coop_select_nearest(graph, cfg.method);
      } else if (kind == MethodKind::HflSelective) {
        std::vector<std::size_t> sizes(m_count);
        for (std::size_t m = 0; m < m_count; ++m) sizes[m] = clusters[m].size();
        edges = coop_select_selective(graph, sizes, cfg.method);
      }
      const std::uint64_t lf = fog_bits(cfg, d);
      for (const auto& e : edges) {
        const auto& lb = graph.f2f(e.neighbour, e.fog);
        rep.e_f2f += tx_energy(lf, lb, cfg.acoustic);
        rep.e_rx += rx_energy(lf, lb, cfg.acoustic);
        rep.payload_bits_total += lf;
        fog_times.push_back(link_time(lf, lb));
      }
      const auto mixed = coop_mix(fog_models, edges);

      for (std::size_t m = 0; m < m_count; ++m) {
        if (!graph.fog_online(m)) continue;
        const auto& lb = graph.f2g(m);
        rep.e_f2g += tx_energy(lf, lb, cfg.acoustic);
        rep.e_rx += rx_energy(lf, lb, cfg.acoustic);
        rep.payload_bits_total += lf;
        gateway_times.push_back(link_time(lf, lb));
      }
      state.global = global_aggregate(mixed, cluster_samples);

      if (trace) {
        trace->clusters = std::move(clusters);
        trace->edges = std::move(edges);
      }
    }
  }

  battery_step(state.battery, costs);
  rep.latency_s = active.empty() ? 0.0 : round_latency(sensor_times, fog_times, gateway_times, comp_time);
  rep.battery_min = state.battery.min();
  rep.battery_mean = state.battery.mean();
  rep.close_totals();
  ++state.round;

  if (trace) {
    trace->active = active;
    trace->assignments = std::move(assignments);
    trace->battery_skipped = std::move(skipped);
  }
  return rep;
}

CentralisedRoute centralised_route(const FeasibilityGraph& graph) {
  CentralisedRoute r;
  const auto fog_of = associate_hfl(graph);
  for (std::size_t i = 0; i < graph.n_sensors(); ++i) {
    if (graph.s2g(i).feasible) {
      r.direct.push_back(i);
    } else if (fog_of[i] != kNoFog) {
      r.relayed.emplace_back(i, fog_of[i]);
    }
  }
  return r;
}

CentralisedResult run_centralised(const ModelParams& init, const FeasibilityGraph& graph,
                                  std::span<const LocalDataset> datasets, const RoundConfig& cfg, std::size_t rounds,
                                  std::uint64_t seed) {
  const std::size_t n = graph.n_sensors();
  if (datasets.size() != n) throw DomainError("run_centralised: sensor count mismatch");
  if (n == 0) throw DomainError("run_centralised: no sensors");
  const auto route = centralised_route(graph);

  CentralisedResult res;
  res.params = init;
  for (auto i : route.direct) res.included.push_back(i);
  for (const auto& [i, m] : route.relayed) res.included.push_back(i);
  std::sort(res.included.begin(), res.included.end());
  if (res.included.empty()) throw DomainError("run_centralised: no sensor can reach the gateway");

  Matrix pooled;
  pooled.cols = datasets[res.included.front()].dim();
  for (auto i : res.included) {
    const auto& m = datasets[i].train;
    if (m.cols != pooled.cols) throw DomainError("run_centralised: feature dimensions differ");
    pooled.data.insert(pooled.data.end(), m.data.begin(), m.data.end());
    pooled.rows += m.rows;
  }

  // Raw upload: 32 bits per feature per training sample, charged once.
  RoundReport upload;
  std::vector<double> sensor_times, fog_times;
  auto raw_bits = [&](std::size_t i) { return 32ULL * datasets[i].dim() * datasets[i].n_samples(); };
  for (auto i : route.direct) {
    const auto bits = raw_bits(i);
    upload.e_s2f += tx_energy(bits, graph.s2g(i), cfg.acoustic);
    upload.e_rx += rx_energy(bits, graph.s2g(i), cfg.acoustic);
    upload.payload_bits_total += bits;
    sensor_times.push_back(link_time(bits, graph.s2g(i)));
  }
  for (const auto& [i, m] : route.relayed) {
    const auto bits = raw_bits(i);
    upload.e_s2f += tx_energy(bits, graph.s2f(i, m), cfg.acoustic);
    upload.e_f2g += tx_energy(bits, graph.f2g(m), cfg.acoustic);
    upload.e_rx += rx_energy(bits, graph.s2f(i, m), cfg.acoustic) + rx_energy(bits, graph.f2g(m), cfg.acoustic);
    upload.payload_bits_total += 2 * bits;
    sensor_times.push_back(link_time(bits, graph.s2f(i, m)));
    fog_times.push_back(link_time(bits, graph.f2g(m)));
  }

  SgdConfig sgd = cfg.sgd;
  sgd.prox_mu = 0.0;
  const double participation = static_cast<double>(res.included.size()) / static_cast<double>(n);
  for (std::size_t t = 0; t < rounds; ++t) {
    auto rng = make_rng(seed, {kStreamTrain, t, n});
    auto local = local_sgd(res.params, pooled, sgd, rng);
    res.params = std::move(local.params);
    RoundReport rep = t == 0 ? upload : RoundReport{};
    rep.round = t + 1;
    rep.e_comp = comp_energy(local.flops, cfg.compute.eps_op_j);
    const double comp_time = static_cast<double>(local.flops) / cfg.compute.flops_per_s;
    rep.latency_s = t == 0 ? round_latency(sensor_times, fog_times, {}, comp_time) : comp_time;
    rep.participation = participation;
    rep.mean_train_loss = local.last_epoch_loss;
    res.reports.push_back(rep);
  }

  // Sensors pay only for their own upload; the gateway trains.
  BatteryState battery(n, cfg.battery_init, cfg.battery_min);
  std::vector<double> costs(n, 0.0);
  for (auto i : route.direct) costs[i] = tx_energy(raw_bits(i), graph.s2g(i), cfg.acoustic);
  for (const auto& [i, m] : route.relayed) costs[i] = tx_energy(raw_bits(i), graph.s2f(i, m), cfg.acoustic);
  battery_step(battery, costs);
  for (auto& rep : res.reports) {
    rep.battery_min = battery.min();
    rep.battery_mean = battery.mean();
    rep.close_totals();
  }
  return res;
}

}  // namespace uwfl
