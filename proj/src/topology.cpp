#include "uwfl/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "uwfl/errors.hpp"

namespace uwfl {

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

void DeploymentConfig::validate() const {
  if (!(lx_m > 0 && ly_m > 0 && h_m > 0)) throw ConfigError("deployment: volume dimensions must be positive");
  if (n_sensors < 1) throw ConfigError("deployment: n_sensors must be >= 1");
  if (n_fogs < 1) throw ConfigError("deployment: n_fogs must be >= 1");
  if (!(0 <= fog_depth.min && fog_depth.min <= fog_depth.max && fog_depth.max <= sensor_depth.min &&
        sensor_depth.min <= sensor_depth.max && sensor_depth.max <= h_m))
    throw ConfigError("deployment: strata must satisfy 0 <= fog_min <= fog_max <= sensor_min <= sensor_max <= H");
  if (!(gateway_x >= 0 && gateway_x <= lx_m && gateway_y >= 0 && gateway_y <= ly_m))
    throw ConfigError("deployment: gateway must lie inside the horizontal area");
}

std::size_t default_fog_count(std::size_t n_sensors) { return std::max<std::size_t>(1, n_sensors / 10); }

FeasibilityGraph::FeasibilityGraph(std::size_t n_sensors, std::size_t n_fogs)
    : n_sensors_(n_sensors),
      n_fogs_(n_fogs),
      s2f_(n_sensors * n_fogs),
      f2f_(n_fogs * n_fogs),
      s2g_(n_sensors),
      f2g_(n_fogs) {}

namespace {

// Closed interval draw that returns the endpoint exactly when it is degenerate.
double uniform_in(Rng& rng, double lo, double hi) {
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

Topology deploy(const DeploymentConfig& c, Rng& rng) {
  c.validate();
  Topology t;
  t.seed = c.seed;
  t.sensors.reserve(c.n_sensors);
  for (std::size_t i = 0; i < c.n_sensors; ++i) {
    const double x = uniform_in(rng, 0, c.lx_m);
    const double y = uniform_in(rng, 0, c.ly_m);
    const double z = uniform_in(rng, c.sensor_depth.min, c.sensor_depth.max);
    t.sensors.push_back({x, y, z});
  }
  t.fogs.reserve(c.n_fogs);
  for (std::size_t m = 0; m < c.n_fogs; ++m) {
    const double x = uniform_in(rng, 0, c.lx_m);
    const double y = uniform_in(rng, 0, c.ly_m);
    const double z = uniform_in(rng, c.fog_depth.min, c.fog_depth.max);
    t.fogs.push_back({x, y, z});
  }
  t.gateway = {c.gateway_x, c.gateway_y, 0.0};
  return t;
}

FeasibilityGraph build_graph(const Topology& topo, const AcousticParams& params, Execution exec) {
  const std::size_t n = topo.sensors.size();
  const std::size_t m = topo.fogs.size();
  FeasibilityGraph g(n, m);
  const auto nn = static_cast<std::ptrdiff_t>(n);
  const auto mm = static_cast<std::ptrdiff_t>(m);

  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < nn; ++i) {
      const auto& s = topo.sensors[i];
      for (std::ptrdiff_t f = 0; f < mm; ++f) g.s2f(i, f) = link_budget(distance(s, topo.fogs[f]), params);
      g.s2g(i) = link_budget(distance(s, topo.gateway), params);
    }
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t a = 0; a < mm; ++a) {
      for (std::ptrdiff_t b = 0; b < mm; ++b)
        if (a != b) g.f2f(a, b) = link_budget(distance(topo.fogs[a], topo.fogs[b]), params);
      g.f2g(a) = link_budget(distance(topo.fogs[a], topo.gateway), params);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t f = 0; f < m; ++f) g.s2f(i, f) = link_budget(distance(topo.sensors[i], topo.fogs[f]), params);
      g.s2g(i) = link_budget(distance(topo.sensors[i], topo.gateway), params);
    }
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = 0; b < m; ++b)
        if (a != b) g.f2f(a, b) = link_budget(distance(topo.fogs[a], topo.fogs[b]), params);
      g.f2g(a) = link_budget(distance(topo.fogs[a], topo.gateway), params);
    }
  }
  return g;
}

double direct_reachability(const FeasibilityGraph& g) {
  if (g.n_sensors() == 0) return 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < g.n_sensors(); ++i) ok += g.s2g(i).feasible ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(g.n_sensors());
}

double fog_reachability(const FeasibilityGraph& g) {
  if (g.n_sensors() == 0) return 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < g.n_sensors(); ++i) {
    for (std::size_t m = 0; m < g.n_fogs(); ++m) {
      if (g.s2f(i, m).feasible && g.fog_online(m)) {
        ++ok;
        break;
      }
    }
  }
  return static_cast<double>(ok) / static_cast<double>(g.n_sensors());
}

FogMotion init_fog_motion(std::size_t n_fogs, const MobilityConfig& mob, Rng& rng) {
  FogMotion motion;
  std::uniform_real_distribution<double> heading(0.0, 2.0 * std::numbers::pi);
  for (std::size_t m = 0; m < n_fogs; ++m) {
    const double h = heading(rng);
    const Vec3 mean{mob.mean_speed_mps * std::cos(h), mob.mean_speed_mps * std::sin(h), 0.0};
    motion.mean_velocity.push_back(mean);
    motion.velocity.push_back(mean);
  }
  return motion;
}

void gauss_markov_step(std::vector<Vec3>& fog_pos, FogMotion& motion, const MobilityConfig& mob,
                       const DeploymentConfig& bounds, Rng& rng) {
  if (!(mob.memory_alpha >= 0 && mob.memory_alpha <= 1)) throw DomainError("gauss_markov_step: alpha must lie in [0,1]");
  if (motion.velocity.size() != fog_pos.size()) throw DomainError("gauss_markov_step: motion state size mismatch");
  const double a = mob.memory_alpha;
  const double noise_scale = std::sqrt(1.0 - a * a) * mob.speed_stddev_mps;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t m = 0; m < fog_pos.size(); ++m) {
    Vec3& v = motion.velocity[m];
    const Vec3& mean = motion.mean_velocity[m];
    // Draw all three components even when the scale is zero so the stream
    // position does not depend on parameters.
    const double nx = normal(rng), ny = normal(rng), nz = normal(rng);
    v.x = a * v.x + (1 - a) * mean.x + noise_scale * nx;
    v.y = a * v.y + (1 - a) * mean.y + noise_scale * ny;
    v.z = a * v.z + (1 - a) * mean.z + noise_scale * nz;
    Vec3& p = fog_pos[m];
    p.x = std::clamp(p.x + v.x * mob.dt_s, 0.0, bounds.lx_m);
    p.y = std::clamp(p.y + v.y * mob.dt_s, 0.0, bounds.ly_m);
    p.z = std::clamp(p.z + v.z * mob.dt_s, bounds.fog_depth.min, bounds.fog_depth.max);
  }
}

namespace {

nlohmann::json to_json(const Vec3& v) { return nlohmann::json::array({v.x, v.y, v.z}); }

Vec3 vec_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw LoadError("topology: position must be a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

std::string topology_to_json(const Topology& topo) {
  nlohmann::json j;
  j["seed"] = topo.seed;
  j["gateway"] = to_json(topo.gateway);
  j["sensors"] = nlohmann::json::array();
  for (const auto& s : topo.sensors) j["sensors"].push_back(to_json(s));
  j["fogs"] = nlohmann::json::array();
  for (const auto& f : topo.fogs) j["fogs"].push_back(to_json(f));
  return j.dump(1) + "\n";
}

Topology topology_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("topology: ") + e.what());
  }
  for (const char* key : {"seed", "gateway", "sensors", "fogs"})
    if (!j.contains(key)) throw LoadError(std::string("topology: missing key '") + key + "'");
  Topology t;
  t.seed = j["seed"].get<std::uint64_t>();
  t.gateway = vec_from_json(j["gateway"]);
  for (const auto& s : j["sensors"]) t.sensors.push_back(vec_from_json(s));
  for (const auto& f : j["fogs"]) t.fogs.push_back(vec_from_json(f));
  return t;
}

}  // namespace uwfl
