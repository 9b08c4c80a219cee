// Serial reference vs OpenMP path for the three hot kernels.

#include <benchmark/benchmark.h>

#include "uwfl/autoenc.hpp"
#include "uwfl/data.hpp"
#include "uwfl/federation.hpp"
#include "uwfl/topology.hpp"

using namespace uwfl;

namespace {

Execution exec_of(const benchmark::State& st) { return st.range(1) ? Execution::Parallel : Execution::Serial; }

Topology topology(std::size_t n) {
  DeploymentConfig c;
  c.n_sensors = n;
  c.n_fogs = default_fog_count(n);
  auto rng = make_rng(1, {kStreamTopology});
  return deploy(c, rng);
}

void BM_BuildGraph(benchmark::State& st) {
  const auto topo = topology(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(build_graph(topo, AcousticParams{}, exec_of(st)));
}

void BM_Scores(benchmark::State& st) {
  auto rng = make_rng(1, {kStreamInit});
  const auto p = init_params(kDefaultLayerSizes, rng);
  Matrix x(static_cast<std::size_t>(st.range(0)), 32);
  std::normal_distribution<double> g;
  for (auto& v : x.data) v = g(rng);
  for (auto _ : st) benchmark::DoNotOptimize(scores(p, x, exec_of(st)));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_RunRound(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const auto graph = build_graph(topology(n), AcousticParams{});
  SynthConfig sc;
  sc.n_sensors = n;
  sc.n_train = 200;
  const auto data = synth_generate(sc);
  auto rng = make_rng(1, {kStreamInit});
  const auto init = init_params(kDefaultLayerSizes, rng);
  RoundConfig cfg;
  cfg.sgd.epochs = 1;
  cfg.method.kind = MethodKind::HflSelective;
  for (auto _ : st) {
    FederationState s(init, n, 500, 0);
    benchmark::DoNotOptimize(run_round(s, graph, data, cfg, 1, exec_of(st)));
  }
}

}  // namespace

BENCHMARK(BM_BuildGraph)->ArgsProduct({{200, 1000}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Scores)->ArgsProduct({{10000}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_RunRound)->ArgsProduct({{50, 200}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
