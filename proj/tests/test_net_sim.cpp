#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "twinforge/error.hpp"
#include "twinforge/net_sim.hpp"
#include "twinforge/network_twin.hpp"
#include "twinforge/rng.hpp"

using namespace twinforge;

namespace {

SimConfig two_sensor_trace() {
  SimConfig c;
  c.n_sensors = 2;
  c.n_gateways = 1;
  c.ul_fraction = 1.0;
  c.gateway_capacity = 1;
  c.min_deadline = c.deadline = 2;
  c.rearrival_probability = 0.0;
  c.duration = 5;
  return c;
}

class SpyPolicy : public WeightedPolicy {
 public:
  std::size_t max_queue = 0;
  std::uint32_t buffer = 0;
  std::vector<std::size_t> select(const GatewayView& v) override {
    max_queue = std::max(max_queue, v.queue.size());
    return WeightedPolicy::select(v);
  }
};

SimConfig random_config(Rng& rng) {
  SimConfig c;
  c.n_sensors = 1 + rng.index(60);
  c.n_gateways = 1 + rng.index(5);
  c.ul_fraction = rng.uniform();
  c.gateway_capacity = 1 + static_cast<std::uint32_t>(rng.index(6));
  c.buffer_capacity = 1 + static_cast<std::uint32_t>(rng.index(20));
  c.min_deadline = static_cast<std::uint32_t>(rng.index(4));
  c.deadline = c.min_deadline + static_cast<std::uint32_t>(rng.index(10));
  c.duration = 1 + static_cast<std::uint32_t>(rng.index(60));
  c.rearrival_probability = rng.uniform();
  c.dl_probability = rng.uniform();
  c.seed = rng.next();
  c.weights = random_weights(rng.next());
  return c;
}

}  // namespace

TEST_CASE("build_topology uses the tested sizes") {
  auto s = build_topology(SizeClass::Small);
  CHECK(s.n_sensors == 50);
  CHECK(s.n_gateways == 2);
  auto l = build_topology(SizeClass::Large);
  CHECK(l.n_sensors == 1000);
  CHECK(l.n_gateways == 20);
  auto m = build_topology(SizeClass::Medium, {{"ul_fraction", 0.45}});
  CHECK(m.n_sensors == 250);
  CHECK(m.n_gateways == 8);
  CHECK(m.ul_fraction == 0.45);
  for (std::size_t i = 0; i < m.n_sensors; ++i) CHECK(m.gateway_of(i) == i % 8);
  CHECK_THROWS_AS(build_topology(SizeClass::Small, {{"bogus", 1}}), Error);
}

TEST_CASE("hand-simulated two sensor trace") {
  SimMetrics m = run_sim(two_sensor_trace());
  CHECK(m.delivered == 2);
  CHECK(m.dropped == 0);
  CHECK(m.throughput_series == std::vector<std::uint32_t>{1, 1, 0, 0, 0});
  CHECK(m.latency_samples == std::vector<std::uint32_t>{0, 1});
}

TEST_CASE("expired packets are dropped") {
  SimConfig c = two_sensor_trace();
  c.min_deadline = c.deadline = 0;
  SimMetrics m = run_sim(c);
  CHECK(m.delivered == 1);
  CHECK(m.dropped == 1);
}

TEST_CASE("zero offered load") {
  SimConfig c = build_topology(SizeClass::Small, {{"ul_fraction", 0.0}});
  SimMetrics m = run_sim(c);
  CHECK(m.throughput_series == std::vector<std::uint32_t>(c.duration, 0));
  CHECK_THROWS_AS(stability(m.throughput_series), Error);
}

TEST_CASE("invalid configs are rejected") {
  SimConfig c;
  c.n_sensors = 0;
  CHECK_THROWS_AS(run_sim(c), Error);
  c = SimConfig{};
  c.duration = 0;
  try {
    validate_config(c);
    FAIL("zero duration accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidConfig);
  }
  c.n_gateways = 0;
  CHECK(config_violations(c).size() == 2);
}

TEST_CASE("weighted_schedule examples") {
  std::vector<Packet> q{{0, Direction::UL, 100, 0, 5, 0}, {1, Direction::UL, 100, 0, 0, 1}};
  auto o = weighted_schedule(q, {0.05, 0.85, 0.05, 0.05}, 0);
  CHECK(o.front() == 1);

  std::vector<bool> served{true, false};
  std::vector<Packet> f{{0, Direction::UL, 100, 0, 5, 0}, {1, Direction::UL, 100, 0, 5, 1}};
  o = weighted_schedule(f, {0.85, 0.05, 0.05, 0.05}, 0, {&served, 2000});
  CHECK(o.front() == 1);

  // Identical apart from created_at; zero windows make age and urgency equal.
  std::vector<Packet> same{{4, Direction::UL, 100, 3, 3, 0}, {4, Direction::UL, 100, 1, 1, 1}};
  o = weighted_schedule(same, {0.25, 0.25, 0.25, 0.25}, 0);
  CHECK(o.front() == 1);
}

TEST_CASE("stability") {
  CHECK(stability(std::vector<std::uint32_t>{5, 5, 5, 5}) == 0.0);
  CHECK(stability(std::vector<std::uint32_t>{2, 4}) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK_THROWS_AS(stability(std::vector<std::uint32_t>{}), Error);
  CHECK_THROWS_AS(stability(std::vector<std::uint32_t>{0, 0}), Error);
}

TEST_CASE("extract_raw_measurements") {
  SimConfig c = build_topology(SizeClass::Large, {{"gateway_capacity", 50}, {"buffer_capacity", 200}});
  SimMetrics m = run_sim(c);
  auto raw = extract_raw_measurements(m, c, 0.5);
  CHECK(raw.device_density == 1000.0);
  CHECK(select_priority(raw, Thresholds{}) == PriorityPair::DensityDeadline);
  CHECK(m.dropped == 0);
  CHECK(normalize_kpis(raw).rho == 1.0);

  SimMetrics lat;
  lat.latency_samples = {9, 9};
  auto r2 = extract_raw_measurements(lat, c, 0.0);
  CHECK(r2.mean_latency_ms == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("conservation, capacity and buffer bound on random configs") {
  Rng rng(99);
  for (int i = 0; i < 300; ++i) {
    SimConfig c = random_config(rng);
    SpyPolicy spy;
    SimMetrics m = run_sim(c, spy);
    CHECK(m.delivered + m.dropped == m.generated);
    CHECK(m.deadline_total == m.generated);
    CHECK(m.throughput_series.size() == c.duration);
    CHECK(spy.max_queue <= c.buffer_capacity);
    for (auto x : m.throughput_series) CHECK(x <= c.n_gateways * c.gateway_capacity);
  }
}

TEST_CASE("deadline hit rate does not rise with load") {
  for (auto size : {SizeClass::Small, SizeClass::Medium}) {
    double prev = 2.0;
    for (double f : {0.20, 0.45, 0.70}) {
      SimConfig c = build_topology(size, {{"ul_fraction", f}}, 3);
      c.weights = split_weights(PriorityPair::DensityDeadline, 0.7);
      SimMetrics m = run_sim(c);
      double hit = static_cast<double>(m.deadline_hits) / static_cast<double>(m.deadline_total);
      CHECK(hit <= prev);
      prev = hit;
    }
  }
}

TEST_CASE("identical configs give identical metrics and match the golden file") {
  SimConfig c = build_topology(SizeClass::Small, {{"ul_fraction", 0.45}, {"duration", 60}}, 7);
  c.weights = split_weights(PriorityPair::DensityDeadline, 0.7);
  SimMetrics a = run_sim(c), b = run_sim(c);
  CHECK(a == b);

  std::string actual = metrics_csv(a) + summary_json(a).dump(1) + "\n";
  const std::string path = std::string(TWINFORGE_GOLDEN_DIR) + "/sim_small_seed7.txt";
  if (std::getenv("TWINFORGE_UPDATE_GOLDEN")) std::ofstream(path) << actual;
  std::ifstream in(path);
  REQUIRE_MESSAGE(in.good(), "golden file missing: " << path);
  std::stringstream expected;
  expected << in.rdbuf();
  CHECK(actual == expected.str());
}

TEST_CASE("network graph mirrors the topology") {
  auto reg = standard_models();
  SimConfig c = build_topology(SizeClass::Small);
  SimMetrics m = run_sim(c);
  TwinGraph g = build_network_graph(c, reg, 0, &m);
  CHECK(g.twins.size() == 52);
  CHECK(g.relationships.size() == 50);
  auto k = kpis_from_graph(g);
  REQUIRE(k.has_value());
  CHECK(k->rho == doctest::Approx(normalize_kpis(extract_raw_measurements(m, c, 0)).rho));
}
