#include <doctest.h>

#include <cmath>

#include "uwfl/errors.hpp"
#include "uwfl/topology.hpp"

using namespace uwfl;

namespace {

bool same_budget(const LinkBudget& a, const LinkBudget& b) {
  return a.distance_m == b.distance_m && a.tl_db == b.tl_db && a.nl_db == b.nl_db && a.sl_min_db == b.sl_min_db &&
         a.feasible == b.feasible && a.rate_bps == b.rate_bps && a.prop_delay_s == b.prop_delay_s &&
         a.tx_power_w == b.tx_power_w;
}

Topology line_topology() {
  // Gateway at the origin; sensor 0 can reach it directly, sensor 1 only via
  // fog 0, sensor 2 only via fog 1 which has no gateway link.
  Topology t;
  t.gateway = {0, 0, 0};
  t.sensors = {{500, 0, 0}, {1500, 0, 0}, {4000, 0, 0}};
  t.fogs = {{900, 0, 0}, {3500, 0, 0}};
  return t;
}

}  // namespace

TEST_CASE("deploy respects volume and strata") {
  DeploymentConfig c;
  c.n_sensors = 300;
  c.n_fogs = 30;
  auto rng = make_rng(7, {kStreamTopology});
  const auto t = deploy(c, rng);
  REQUIRE(t.sensors.size() == 300);
  REQUIRE(t.fogs.size() == 30);
  for (const auto& s : t.sensors) {
    CHECK(s.x >= 0);
    CHECK(s.x <= c.lx_m);
    CHECK(s.y >= 0);
    CHECK(s.y <= c.ly_m);
    CHECK(s.z >= 500);
    CHECK(s.z <= 1000);
  }
  for (const auto& f : t.fogs) {
    CHECK(f.z >= 100);
    CHECK(f.z <= 400);
  }
  CHECK(t.gateway == Vec3{1000, 1000, 0});
}

TEST_CASE("deploy is deterministic per seed") {
  DeploymentConfig c;
  auto r1 = make_rng(3, {kStreamTopology});
  auto r2 = make_rng(3, {kStreamTopology});
  auto r3 = make_rng(4, {kStreamTopology});
  const auto a = deploy(c, r1), b = deploy(c, r2), d = deploy(c, r3);
  CHECK(a == b);
  CHECK_FALSE(a == d);
}

TEST_CASE("degenerate depth stratum is exact") {
  DeploymentConfig c;
  c.sensor_depth = {750, 750};
  auto rng = make_rng(1, {kStreamTopology});
  for (const auto& s : deploy(c, rng).sensors) CHECK(s.z == 750.0);
}

TEST_CASE("deployment validation") {
  DeploymentConfig c;
  c.fog_depth = {500, 100};
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("default fog count") {
  CHECK(default_fog_count(200) == 20);
  CHECK(default_fog_count(5) == 1);
  CHECK(default_fog_count(155) == 15);
}

TEST_CASE("serial and parallel graphs are identical") {
  DeploymentConfig c;
  c.n_sensors = 120;
  c.n_fogs = 12;
  auto rng = make_rng(11, {kStreamTopology});
  const auto t = deploy(c, rng);
  AcousticParams p;
  const auto gs = build_graph(t, p, Execution::Serial);
  const auto gp = build_graph(t, p, Execution::Parallel);
  for (std::size_t i = 0; i < 120; ++i) {
    CHECK(same_budget(gs.s2g(i), gp.s2g(i)));
    for (std::size_t m = 0; m < 12; ++m) CHECK(same_budget(gs.s2f(i, m), gp.s2f(i, m)));
  }
  for (std::size_t m = 0; m < 12; ++m) {
    CHECK(same_budget(gs.f2g(m), gp.f2g(m)));
    for (std::size_t j = 0; j < 12; ++j) CHECK(same_budget(gs.f2f(m, j), gp.f2f(m, j)));
  }
}

TEST_CASE("graph budgets follow pairwise distances") {
  const auto t = line_topology();
  AcousticParams p;
  const auto g = build_graph(t, p);
  CHECK(g.s2f(1, 0).distance_m == doctest::Approx(600));
  CHECK(g.f2f(0, 1).distance_m == doctest::Approx(2600));
  CHECK(g.f2f(0, 1).distance_m == g.f2f(1, 0).distance_m);
  CHECK(g.f2g(1).distance_m == doctest::Approx(3500));
  CHECK(g.fog_online(0));
  CHECK_FALSE(g.fog_online(1));
}

TEST_CASE("reachability on a hand-built line") {
  const auto g = build_graph(line_topology(), AcousticParams{});
  CHECK(direct_reachability(g) == doctest::Approx(1.0 / 3));
  // Sensor 2 reaches fog 1, but fog 1 is offline; sensor 0 reaches fog 0.
  CHECK(fog_reachability(g) == doctest::Approx(2.0 / 3));
}

TEST_CASE("fog path reachability never below zero-fog case") {
  DeploymentConfig c;
  c.n_sensors = 80;
  c.n_fogs = 8;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    c.seed = s;
    auto rng = make_rng(s, {kStreamTopology});
    const auto g = build_graph(deploy(c, rng), AcousticParams{});
    const double d = direct_reachability(g), f = fog_reachability(g);
    CHECK(d >= 0);
    CHECK(d <= 1);
    CHECK(f >= 0);
    CHECK(f <= 1);
  }
}

TEST_CASE("topology json round trip") {
  DeploymentConfig c;
  c.n_sensors = 17;
  c.n_fogs = 3;
  c.seed = 99;
  auto rng = make_rng(99, {kStreamTopology});
  const auto t = deploy(c, rng);
  CHECK(topology_from_json(topology_to_json(t)) == t);
  CHECK_THROWS_AS(topology_from_json("{\"seed\": 1}"), LoadError);
  CHECK_THROWS_AS(topology_from_json("not json"), LoadError);
}

TEST_CASE("gauss-markov mobility stays inside the fog stratum") {
  DeploymentConfig c;
  c.n_fogs = 10;
  MobilityConfig mob;
  mob.enabled = true;
  mob.mean_speed_mps = 5.0;  // fast enough to hit walls
  auto rng = make_rng(5, {kStreamMobility});
  auto trng = make_rng(5, {kStreamTopology});
  auto t = deploy(c, trng);
  auto motion = init_fog_motion(t.fogs.size(), mob, rng);
  const auto start = t.fogs;
  for (int step = 0; step < 200; ++step) {
    gauss_markov_step(t.fogs, motion, mob, c, rng);
    for (const auto& f : t.fogs) {
      CHECK(f.x >= 0);
      CHECK(f.x <= c.lx_m);
      CHECK(f.y >= 0);
      CHECK(f.y <= c.ly_m);
      CHECK(f.z >= c.fog_depth.min);
      CHECK(f.z <= c.fog_depth.max);
    }
  }
  CHECK(t.fogs != start);
}

TEST_CASE("gauss-markov with full memory and no noise moves at constant velocity") {
  DeploymentConfig c;
  c.lx_m = c.ly_m = 1e6;
  MobilityConfig mob;
  mob.memory_alpha = 1.0;
  mob.dt_s = 10;
  std::vector<Vec3> pos{{1000, 1000, 200}};
  FogMotion motion;
  motion.velocity = {{1.0, -0.5, 0.0}};
  motion.mean_velocity = {{0.0, 0.0, 0.0}};
  auto rng = make_rng(1, {kStreamMobility});
  gauss_markov_step(pos, motion, mob, c, rng);
  CHECK(pos[0].x == doctest::Approx(1010));
  CHECK(pos[0].y == doctest::Approx(995));
  CHECK(pos[0].z == doctest::Approx(200));
}
