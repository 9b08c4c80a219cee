#include "uwfl/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "uwfl/errors.hpp"

namespace uwfl {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view v) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : v) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

double to_double(std::string_view v) {
  const std::string s = trim(v);
  double x = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) throw ConfigError("expected a number, got '" + s + "'");
  return x;
}

std::uint64_t to_u64(std::string_view v) {
  const std::string s = trim(v);
  std::uint64_t x = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw ConfigError("expected a nonnegative integer, got '" + s + "'");
  return x;
}

std::size_t to_size(std::string_view v) { return static_cast<std::size_t>(to_u64(v)); }

bool to_bool(std::string_view v) {
  const std::string s = trim(v);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("expected true or false, got '" + s + "'");
}

std::pair<double, double> to_pair(std::string_view v) {
  const auto parts = split_list(v);
  if (parts.size() != 2) throw ConfigError("expected two comma-separated numbers, got '" + std::string(v) + "'");
  return {to_double(parts[0]), to_double(parts[1])};
}

template <class T, class F>
std::vector<T> to_list(std::string_view v, F conv) {
  std::vector<T> out;
  for (const auto& p : split_list(v)) out.push_back(conv(p));
  return out;
}

using Setter = std::function<void(ExperimentConfig&, std::string_view)>;
using Schema = std::map<std::string, std::map<std::string, Setter>, std::less<>>;

#define UWFL_NUM(field) [](ExperimentConfig& c, std::string_view v) { c.field = to_double(v); }
#define UWFL_SIZE(field) [](ExperimentConfig& c, std::string_view v) { c.field = to_size(v); }
#define UWFL_BOOL(field) [](ExperimentConfig& c, std::string_view v) { c.field = to_bool(v); }

const Schema& schema() {
  static const Schema s = {
      {"experiment",
       {
           {"rounds", UWFL_SIZE(rounds)},
           {"seeds", [](ExperimentConfig& c, std::string_view v) { c.seeds = to_list<std::uint64_t>(v, to_u64); }},
           {"threshold_percentile", UWFL_NUM(threshold_percentile)},
           {"lambda_energy", UWFL_NUM(lambda_energy)},
           {"lambda_latency", UWFL_NUM(lambda_latency)},
           {"output_dir", [](ExperimentConfig& c, std::string_view v) { c.output_dir = trim(v); }},
       }},
      {"deployment",
       {
           {"lx_m", UWFL_NUM(deployment.lx_m)},
           {"ly_m", UWFL_NUM(deployment.ly_m)},
           {"h_m", UWFL_NUM(deployment.h_m)},
           {"n_sensors", UWFL_SIZE(deployment.n_sensors)},
           {"n_fogs",
            [](ExperimentConfig& c, std::string_view v) {
              if (trim(v) == "auto") {
                c.auto_fog_count = true;
              } else {
                c.deployment.n_fogs = to_size(v);
                c.auto_fog_count = false;
              }
            }},
           {"sensor_depth_min", UWFL_NUM(deployment.sensor_depth.min)},
           {"sensor_depth_max", UWFL_NUM(deployment.sensor_depth.max)},
           {"fog_depth_min", UWFL_NUM(deployment.fog_depth.min)},
           {"fog_depth_max", UWFL_NUM(deployment.fog_depth.max)},
           {"gateway_x", UWFL_NUM(deployment.gateway_x)},
           {"gateway_y", UWFL_NUM(deployment.gateway_y)},
       }},
      {"acoustic",
       {
           {"carrier_freq_khz", UWFL_NUM(acoustic.carrier_freq_khz)},
           {"bandwidth_hz", UWFL_NUM(acoustic.bandwidth_hz)},
           {"spreading_factor", UWFL_NUM(acoustic.spreading_factor)},
           {"sound_speed_mps", UWFL_NUM(acoustic.sound_speed_mps)},
           {"wind_mps", UWFL_NUM(acoustic.wind_mps)},
           {"shipping", UWFL_NUM(acoustic.shipping)},
           {"target_snr_db", UWFL_NUM(acoustic.target_snr_db)},
           {"impl_loss_db", UWFL_NUM(acoustic.impl_loss_db)},
           {"sl_max_db", UWFL_NUM(acoustic.sl_max_db)},
           {"ea_efficiency", UWFL_NUM(acoustic.ea_efficiency)},
           {"circuit_tx_w", UWFL_NUM(acoustic.circuit_tx_w)},
           {"circuit_rx_w", UWFL_NUM(acoustic.circuit_rx_w)},
           {"water_density", UWFL_NUM(acoustic.water_density)},
           {"ref_pressure", UWFL_NUM(acoustic.ref_pressure)},
       }},
      {"compute",
       {
           {"eps_op_j", UWFL_NUM(compute.eps_op_j)},
           {"flops_per_s", UWFL_NUM(compute.flops_per_s)},
       }},
      {"sgd",
       {
           {"epochs", UWFL_SIZE(sgd.epochs)},
           {"lr", UWFL_NUM(sgd.lr)},
           {"batch_size", UWFL_SIZE(sgd.batch_size)},
       }},
      {"model",
       {
           {"hidden_layers",
            [](ExperimentConfig& c, std::string_view v) { c.hidden_layers = to_list<std::size_t>(v, to_size); }},
       }},
      {"method",
       {
           {"kind", [](ExperimentConfig& c, std::string_view v) { c.method.kind = parse_method(trim(v)); }},
           {"prox_mu", UWFL_NUM(method.prox_mu)},
           {"nearest_weights", [](ExperimentConfig& c, std::string_view v) { c.method.nearest_weights = to_pair(v); }},
           {"selective_weights",
            [](ExperimentConfig& c, std::string_view v) { c.method.selective_weights = to_pair(v); }},
           {"selective_distance_quantile", UWFL_NUM(method.selective_distance_quantile)},
           {"small_cluster_factor", UWFL_NUM(method.small_cluster_factor)},
           {"small_cluster_floor", UWFL_NUM(method.small_cluster_floor)},
           {"max_neighbours", UWFL_SIZE(method.max_neighbours)},
       }},
      {"compression",
       {
           {"rho_s", UWFL_NUM(compression.rho_s)},
           {"quantize", UWFL_BOOL(compression.quantize)},
           {"b_q", [](ExperimentConfig& c, std::string_view v) { c.compression.b_q = static_cast<unsigned>(to_size(v)); }},
           {"fog_payload_bits", UWFL_SIZE(fog_payload_bits)},
       }},
      {"data",
       {
           {"source",
            [](ExperimentConfig& c, std::string_view v) {
              const auto s = trim(v);
              if (s == "synthetic") {
                c.source = DataSource::Synthetic;
              } else if (s == "benchmark") {
                c.source = DataSource::Benchmark;
              } else {
                throw ConfigError("source must be 'synthetic' or 'benchmark', got '" + s + "'");
              }
            }},
           {"normalize", UWFL_BOOL(normalize_synthetic)},
           {"dim", UWFL_SIZE(synth.dim)},
           {"n_train", UWFL_SIZE(synth.n_train)},
           {"n_val", UWFL_SIZE(synth.n_val)},
           {"n_test", UWFL_SIZE(synth.n_test)},
           {"n_modes", UWFL_SIZE(synth.n_modes)},
           {"dirichlet_alpha", UWFL_NUM(synth.dirichlet_alpha)},
           {"anomaly_rate", UWFL_NUM(synth.anomaly_rate)},
           {"anomaly_magnitude",
            [](ExperimentConfig& c, std::string_view v) {
              std::tie(c.synth.anomaly_mag_lo, c.synth.anomaly_mag_hi) = to_pair(v);
            }},
           {"mode_sigma", UWFL_NUM(synth.mode_sigma)},
           {"anomaly_feature_fraction", UWFL_NUM(synth.anomaly_feature_fraction)},
           {"mean_segment_length", UWFL_NUM(synth.mean_segment_length)},
           {"root", [](ExperimentConfig& c, std::string_view v) { c.benchmark.root = trim(v); }},
           {"entities",
            [](ExperimentConfig& c, std::string_view v) {
              c.benchmark.entities = to_list<std::string>(v, [](const std::string& s) { return s; });
            }},
           {"benchmark_dim", UWFL_SIZE(benchmark.dim)},
           {"window", UWFL_SIZE(benchmark.window)},
           {"stride", UWFL_SIZE(benchmark.stride)},
           {"val_fraction", UWFL_NUM(benchmark.val_fraction)},
       }},
      {"mobility",
       {
           {"enabled", UWFL_BOOL(mobility.enabled)},
           {"mean_speed_mps", UWFL_NUM(mobility.mean_speed_mps)},
           {"memory_alpha", UWFL_NUM(mobility.memory_alpha)},
           {"speed_stddev_mps", UWFL_NUM(mobility.speed_stddev_mps)},
           {"dt_s", UWFL_NUM(mobility.dt_s)},
       }},
      {"battery",
       {
           {"e_init", UWFL_NUM(battery_init)},
           {"e_min", UWFL_NUM(battery_min)},
       }},
      {"grid",
       {
           {"methods",
            [](ExperimentConfig& c, std::string_view v) {
              c.grid_methods = to_list<MethodKind>(v, [](const std::string& s) { return parse_method(s); });
            }},
           {"n_sensors",
            [](ExperimentConfig& c, std::string_view v) { c.grid_sensor_counts = to_list<std::size_t>(v, to_size); }},
       }},
  };
  return s;
}

#undef UWFL_NUM
#undef UWFL_SIZE
#undef UWFL_BOOL

}  // namespace

void ExperimentConfig::set(std::string_view section, std::string_view key, std::string_view value) {
  const auto& s = schema();
  const auto sec = s.find(section);
  if (sec == s.end()) throw ConfigError("unknown section [" + std::string(section) + "]");
  const auto k = sec->second.find(std::string(key));
  if (k == sec->second.end())
    throw ConfigError("unknown key '" + std::string(key) + "' in section [" + std::string(section) + "]");
  k->second(*this, value);
}

void ExperimentConfig::validate() const {
  deployment.validate();
  if (!auto_fog_count && deployment.n_fogs < 1) throw ConfigError("deployment: n_fogs must be >= 1");
  acoustic.validate();
  sgd.validate();
  method.validate();
  compression.validate();
  if (source == DataSource::Synthetic) {
    SynthConfig probe = synth;
    probe.n_sensors = std::max<std::size_t>(1, deployment.n_sensors);
    probe.validate();
  } else if (benchmark.root.empty()) {
    throw ConfigError("data: benchmark source needs a root directory");
  }
  if (!(compute.eps_op_j >= 0 && compute.flops_per_s > 0)) throw ConfigError("compute: invalid cost model");
  if (seeds.empty()) throw ConfigError("experiment: at least one seed is required");
  if (!(threshold_percentile > 0 && threshold_percentile <= 100))
    throw ConfigError("experiment: threshold_percentile must lie in (0, 100]");
  for (auto h : hidden_layers)
    if (h == 0) throw ConfigError("model: hidden layer sizes must be positive");
  if (!(battery_init > 0 && battery_min >= 0 && battery_min < battery_init))
    throw ConfigError("battery: need 0 <= e_min < e_init");
  if (mobility.enabled && !(mobility.memory_alpha >= 0 && mobility.memory_alpha <= 1 && mobility.dt_s > 0))
    throw ConfigError("mobility: memory_alpha must lie in [0, 1] and dt_s must be positive");
}

std::size_t ExperimentConfig::n_fogs() const {
  return auto_fog_count ? default_fog_count(deployment.n_sensors) : deployment.n_fogs;
}

std::vector<std::size_t> ExperimentConfig::layer_sizes(std::size_t d) const {
  std::vector<std::size_t> out{d};
  out.insert(out.end(), hidden_layers.begin(), hidden_layers.end());
  out.push_back(d);
  return out;
}

RoundConfig ExperimentConfig::round_config() const {
  RoundConfig rc;
  rc.acoustic = acoustic;
  rc.compute = compute;
  rc.sgd = sgd;
  rc.compression = compression;
  rc.method = method;
  rc.fog_payload_bits = fog_payload_bits;
  rc.battery_init = battery_init;
  rc.battery_min = battery_min;
  return rc;
}

void apply_config_text(ExperimentConfig& cfg, std::string_view text, std::string_view origin) {
  std::istringstream in{std::string(text)};
  std::string line, section;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw ConfigError(std::string(origin) + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') fail("malformed section header '" + body + "'");
      section = trim(std::string_view(body).substr(1, body.size() - 2));
      if (!schema().contains(section)) fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) fail("expected key = value, got '" + body + "'");
    if (section.empty()) fail("key outside of any section");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    try {
      cfg.set(section, key, value);
    } catch (const ConfigError& e) {
      fail(e.what());
    }
  }
}

ExperimentConfig parse_config_text(std::string_view text, std::string_view origin) {
  ExperimentConfig cfg;
  apply_config_text(cfg, text, origin);
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

}  // namespace uwfl
