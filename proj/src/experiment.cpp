#include "uwfl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "uwfl/errors.hpp"
#include "uwfl/report.hpp"

namespace uwfl {

using nlohmann::json;

DeploymentConfig deployment_for(const ExperimentConfig& cfg, std::size_t n_sensors, std::uint64_t seed) {
  DeploymentConfig d = cfg.deployment;
  d.n_sensors = n_sensors;
  if (cfg.auto_fog_count) {
    d.n_fogs = cfg.source == DataSource::Benchmark ? std::max<std::size_t>(2, n_sensors / 10)
                                                   : default_fog_count(n_sensors);
  }
  d.seed = seed;
  return d;
}

Topology make_topology(const ExperimentConfig& cfg, std::size_t n_sensors, std::uint64_t seed) {
  const auto dep = deployment_for(cfg, n_sensors, seed);
  auto rng = make_rng(seed, {kStreamTopology});
  return deploy(dep, rng);
}

Evaluation evaluate(const ModelParams& init, const ModelParams& model, std::span<const LocalDataset> datasets,
                    double percentile, Execution exec) {
  Evaluation ev;
  std::vector<double> val_errors;
  double init_sum = 0.0, final_sum = 0.0;
  std::size_t train_rows = 0;
  for (const auto& ds : datasets) {
    const auto v = scores(model, ds.val, exec);
    val_errors.insert(val_errors.end(), v.begin(), v.end());
    for (double e : scores(init, ds.train, exec)) init_sum += e;
    for (double e : scores(model, ds.train, exec)) final_sum += e;
    train_rows += ds.train.rows;
  }
  if (val_errors.empty()) throw DomainError("evaluate: no validation data");
  ev.initial_loss = init_sum / static_cast<double>(train_rows);
  ev.final_loss = final_sum / static_cast<double>(train_rows);
  ev.threshold = calibrate_threshold(val_errors, percentile);

  std::uint64_t tp = 0, fp = 0, fn = 0, atp = 0, afp = 0, afn = 0;
  for (const auto& ds : datasets) {
    const auto pred = flag(scores(model, ds.test, exec), ev.threshold);
    const auto p = f1_point(pred, ds.test_labels);
    tp += p.tp;
    fp += p.fp;
    fn += p.fn;
    if (p.tp + p.fn == 0) continue;  // no anomalies: segments undefined
    const auto a = f1_point_adjusted(pred, ds.test_labels);
    atp += a.tp;
    afp += a.fp;
    afn += a.fn;
    ++ev.adjusted_entities;
  }
  ev.point = detection_from_counts(tp, fp, fn);
  ev.adjusted = detection_from_counts(atp, afp, afn);
  return ev;
}

RunResult run_experiment(const ExperimentConfig& cfg, MethodKind method, std::size_t n_sensors, std::uint64_t seed,
                         Execution exec) {
  cfg.validate();
  std::vector<LocalDataset> datasets;
  if (cfg.source == DataSource::Synthetic) {
    SynthConfig sc = cfg.synth;
    sc.n_sensors = n_sensors;
    sc.seed = seed;
    sc.anomaly_seed = seed;
    datasets = synth_generate(sc);
    if (cfg.normalize_synthetic)
      for (auto& ds : datasets) normalize(ds);
  } else {
    datasets = load_benchmark(cfg.benchmark).datasets;
    n_sensors = datasets.size();
  }
  if (n_sensors == 0) throw ConfigError("experiment: no sensors");

  RunResult res;
  res.method = method;
  res.n_sensors = n_sensors;
  res.seed = seed;

  Topology topo = make_topology(cfg, n_sensors, seed);
  res.n_fogs = topo.fogs.size();
  auto graph = build_graph(topo, cfg.acoustic, exec);
  res.direct_reachability = direct_reachability(graph);
  res.fog_reachability = fog_reachability(graph);

  auto init_rng = make_rng(seed, {kStreamInit});
  const auto init = init_params(cfg.layer_sizes(datasets.front().dim()), init_rng);

  RoundConfig rc = cfg.round_config();
  rc.method.kind = method;

  if (method == MethodKind::Centralised) {
    if (cfg.rounds == 0) {
      res.model = init;
    } else {
      auto c = run_centralised(init, graph, datasets, rc, cfg.rounds, seed);
      res.model = std::move(c.params);
      res.reports = std::move(c.reports);
    }
  } else {
    FederationState state(init, n_sensors, cfg.battery_init, cfg.battery_min);
    const auto dep = deployment_for(cfg, n_sensors, seed);
    auto mob_rng = make_rng(seed, {kStreamMobility});
    FogMotion motion;
    if (cfg.mobility.enabled) motion = init_fog_motion(topo.fogs.size(), cfg.mobility, mob_rng);
    for (std::size_t t = 0; t < cfg.rounds; ++t) {
      if (cfg.mobility.enabled && t > 0) {
        gauss_markov_step(topo.fogs, motion, cfg.mobility, dep, mob_rng);
        graph = build_graph(topo, cfg.acoustic, exec);
      }
      res.reports.push_back(run_round(state, graph, datasets, rc, seed, exec));
    }
    res.model = std::move(state.global);
  }
  res.eval = evaluate(init, res.model, datasets, cfg.threshold_percentile, exec);
  return res;
}

namespace {

struct Totals {
  double e_s2f = 0, e_f2f = 0, e_f2g = 0, e_rx = 0, e_comp = 0, e_round = 0, e_total = 0, latency = 0;
  double participation = 0;
  std::uint64_t bits = 0;
};

Totals totals(const RunResult& run) {
  Totals t;
  for (const auto& r : run.reports) {
    t.e_s2f += r.e_s2f;
    t.e_f2f += r.e_f2f;
    t.e_f2g += r.e_f2g;
    t.e_rx += r.e_rx;
    t.e_comp += r.e_comp;
    t.e_round += r.e_round;
    t.e_total += r.e_total;
    t.latency += r.latency_s;
    t.participation += r.participation;
    t.bits += r.payload_bits_total;
  }
  if (!run.reports.empty()) t.participation /= static_cast<double>(run.reports.size());
  return t;
}

json detection_json(const DetectionResult& d) {
  return {{"precision", d.precision}, {"recall", d.recall}, {"f1", d.f1}, {"tp", d.tp}, {"fp", d.fp}, {"fn", d.fn}};
}

}  // namespace

std::string summary_json(const RunResult& run, const ExperimentConfig& cfg) {
  const auto t = totals(run);
  std::vector<double> energy, latency;
  for (const auto& r : run.reports) {
    energy.push_back(r.e_round);
    latency.push_back(r.latency_s);
  }
  const std::size_t d = run.model.size();
  json j;
  j["method"] = std::string(method_name(run.method));
  j["n_sensors"] = run.n_sensors;
  j["n_fogs"] = run.n_fogs;
  j["seed"] = run.seed;
  j["rounds"] = run.reports.size();
  j["data_source"] = cfg.source == DataSource::Synthetic ? "synthetic" : "benchmark";
  j["d_params"] = d;
  j["reachability"] = {{"direct", run.direct_reachability}, {"fog", run.fog_reachability}};
  j["participation_mean"] = t.participation;
  j["energy_j"] = {{"e_s2f", t.e_s2f},   {"e_f2f", t.e_f2f},     {"e_f2g", t.e_f2g},
                   {"e_rx", t.e_rx},     {"e_comp", t.e_comp},   {"e_round", t.e_round},
                   {"e_total", t.e_total}, {"e_round_per_sensor", t.e_round / static_cast<double>(run.n_sensors)}};
  j["latency_total_s"] = t.latency;
  j["payload_bits_total"] = t.bits;
  j["compression"] = {{"rho_s", cfg.compression.rho_s},
                      {"quantize", cfg.compression.quantize},
                      {"upload_bits", upload_bits(cfg.compression, d)},
                      {"effective_ratio", static_cast<double>(upload_bits(cfg.compression, d)) / (32.0 * static_cast<double>(d))}};
  j["loss"] = {{"initial", run.eval.initial_loss}, {"final", run.eval.final_loss}};
  j["evaluation"] = {{"threshold", run.eval.threshold},
                     {"threshold_percentile", cfg.threshold_percentile},
                     {"point", detection_json(run.eval.point)},
                     {"point_adjusted", detection_json(run.eval.adjusted)},
                     {"point_adjusted_entities", run.eval.adjusted_entities}};
  j["objective"] = {{"lambda_energy", cfg.lambda_energy},
                    {"lambda_latency", cfg.lambda_latency},
                    {"value", objective_value(run.eval.final_loss, energy, latency, cfg.lambda_energy, cfg.lambda_latency)}};
  if (!run.reports.empty())
    j["battery_j"] = {{"min", run.reports.back().battery_min}, {"mean", run.reports.back().battery_mean}};
  return j.dump(2) + "\n";
}

void write_run(const RunResult& run, const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  emit_csv(dir / "rounds.csv", run.reports);
  write_text_file(dir / "summary.json", summary_json(run, cfg));
}

std::string cell_name(MethodKind method, std::size_t n_sensors, std::uint64_t seed) {
  return std::string(method_name(method)) + "_n" + std::to_string(n_sensors) + "_s" + std::to_string(seed);
}

std::vector<GridCell> grid_cells(const ExperimentConfig& cfg) {
  const auto methods = cfg.grid_methods.empty() ? all_methods() : cfg.grid_methods;
  const auto sizes =
      cfg.grid_sensor_counts.empty() ? std::vector<std::size_t>{cfg.deployment.n_sensors} : cfg.grid_sensor_counts;
  std::vector<GridCell> out;
  for (auto m : methods)
    for (auto n : sizes)
      for (auto s : cfg.seeds) out.push_back({m, n, s});
  return out;
}

const std::vector<std::string>& grid_metric_names() {
  static const std::vector<std::string> names{
      "participation", "direct_reachability", "fog_reachability", "f1", "pa_f1", "precision", "recall",
      "e_s2f", "e_f2f", "e_f2g", "e_rx", "e_comp", "e_round", "e_total", "e_round_per_sensor",
      "latency_s", "final_loss"};
  return names;
}

std::vector<double> grid_metrics(const RunResult& run) {
  const auto t = totals(run);
  return {t.participation,
          run.direct_reachability,
          run.fog_reachability,
          run.eval.point.f1,
          run.eval.adjusted.f1,
          run.eval.point.precision,
          run.eval.point.recall,
          t.e_s2f,
          t.e_f2f,
          t.e_f2g,
          t.e_rx,
          t.e_comp,
          t.e_round,
          t.e_total,
          t.e_round / static_cast<double>(run.n_sensors),
          t.latency,
          run.eval.final_loss};
}

GridOutcome run_grid(const ExperimentConfig& cfg, std::size_t jobs, std::ostream* log) {
  cfg.validate();
  const auto cells = grid_cells(cfg);
  const std::filesystem::path out = cfg.output_dir;
  std::vector<std::vector<double>> metrics(cells.size());
  std::vector<std::size_t> fogs(cells.size(), 0);
  std::vector<std::string> errors(cells.size());
  std::vector<char> done(cells.size(), 0);
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  jobs = std::max<std::size_t>(1, std::min(jobs, cells.size()));
  const Execution exec = jobs > 1 ? Execution::Serial : Execution::Parallel;

  auto worker = [&] {
    for (std::size_t k = next++; k < cells.size(); k = next++) {
      const auto& c = cells[k];
      const auto name = cell_name(c.method, c.n_sensors, c.seed);
      try {
        const auto run = run_experiment(cfg, c.method, c.n_sensors, c.seed, exec);
        write_run(run, cfg, out / "cells" / name);
        metrics[k] = grid_metrics(run);
        fogs[k] = run.n_fogs;
        done[k] = 1;
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
      if (log) {
        std::lock_guard lock(log_mutex);
        *log << (done[k] ? "done   " : "FAILED ") << name << (done[k] ? "" : ": " + errors[k]) << '\n';
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < jobs; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  GridOutcome outcome;
  const auto& names = grid_metric_names();
  std::ostringstream runs;
  runs << "method,n_sensors,n_fogs,seed";
  for (const auto& n : names) runs << ',' << n;
  runs << '\n';
  // (method, N) -> indices of completed cells, in grid order.
  std::vector<std::pair<std::pair<MethodKind, std::size_t>, std::vector<std::size_t>>> groups;
  json failures = json::array();
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const auto& c = cells[k];
    if (!done[k]) {
      outcome.failures.emplace_back(c, errors[k]);
      failures.push_back({{"cell", cell_name(c.method, c.n_sensors, c.seed)},
                          {"method", std::string(method_name(c.method))},
                          {"n_sensors", c.n_sensors},
                          {"seed", c.seed},
                          {"error", errors[k]}});
      continue;
    }
    ++outcome.completed;
    runs << method_name(c.method) << ',' << c.n_sensors << ',' << fogs[k] << ',' << c.seed;
    for (double v : metrics[k]) runs << ',' << format_real(v);
    runs << '\n';
    const auto key = std::make_pair(c.method, c.n_sensors);
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == key; });
    if (it == groups.end()) {
      groups.push_back({key, {}});
      it = std::prev(groups.end());
    }
    it->second.push_back(k);
  }

  std::ostringstream summary;
  summary << "method,n_sensors,n_fogs,n_seeds";
  for (const auto& n : names) summary << ',' << n << "_mean," << n << "_std";
  summary << '\n';
  for (const auto& [key, idx] : groups) {
    summary << method_name(key.first) << ',' << key.second << ',' << fogs[idx.front()] << ',' << idx.size();
    for (std::size_t m = 0; m < names.size(); ++m) {
      double mean = 0.0;
      for (auto k : idx) mean += metrics[k][m];
      mean /= static_cast<double>(idx.size());
      double var = 0.0;
      for (auto k : idx) var += (metrics[k][m] - mean) * (metrics[k][m] - mean);
      const double sd = idx.size() > 1 ? std::sqrt(var / static_cast<double>(idx.size() - 1)) : 0.0;
      summary << ',' << format_real(mean) << ',' << format_real(sd);
    }
    summary << '\n';
  }

  write_text_file(out / "grid_runs.csv", runs.str());
  write_text_file(out / "grid_summary.csv", summary.str());
  write_text_file(out / "failures.json", json{{"failed", failures}, {"completed", outcome.completed}}.dump(2) + "\n");
  return outcome;
}

std::vector<ReachRow> reach_study(const ExperimentConfig& cfg, const std::vector<std::size_t>& sensor_counts,
                                  const std::vector<std::uint64_t>& seeds) {
  std::vector<ReachRow> rows;
  for (auto n : sensor_counts)
    for (auto s : seeds) {
      const auto topo = make_topology(cfg, n, s);
      const auto graph = build_graph(topo, cfg.acoustic);
      rows.push_back({n, topo.fogs.size(), s, direct_reachability(graph), fog_reachability(graph)});
    }
  return rows;
}

std::string reach_csv(const std::vector<ReachRow>& rows) {
  std::ostringstream out;
  out << "n_sensors,n_fogs,seed,direct_reachability,fog_reachability\n";
  for (const auto& r : rows)
    out << r.n_sensors << ',' << r.n_fogs << ',' << r.seed << ',' << format_real(r.direct) << ','
        << format_real(r.fog) << '\n';
  return out.str();
}

}  // namespace uwfl
