#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "twinforge/error.hpp"
#include "twinforge/network_twin.hpp"
#include "twinforge/services.hpp"

using namespace twinforge;

namespace {

TwinGraph bins_graph(std::size_t n, std::size_t missing_fill) {
  auto reg = standard_models();
  TwinGraph g;
  for (std::size_t i = 0; i < n; ++i) {
    DigitalTwin b{"bin-" + std::to_string(i), "waste_bin", {}, {}};
    b.properties["x"] = {Value{double(i)}, PropertyKind::Static, 0};
    b.properties["y"] = {Value{0.0}, PropertyKind::Static, 0};
    if (i != missing_fill) b.properties["fill_level"] = {Value{0.1 * double(i)}, PropertyKind::Dynamic, 0};
    b.properties["fill_rate"] = {Value{0.1}, PropertyKind::Dynamic, 0};
    g = add_twin(g, b, reg);
  }
  return g;
}

Bin bin(std::string id, double x, double y, double fill, double rate = 0) { return {std::move(id), x, y, fill, rate}; }

ScenarioSpec tic_spec() {
  ScenarioSpec s;
  s.kind = ScenarioKind::HighDensity;
  s.weight_mode = WeightMode::Split;
  s.service = ServiceId::Tic;
  s.size_class = SizeClass::Small;
  s.sim = {{"ul_fraction", 0.4}, {"min_deadline", 0}, {"deadline", 4}, {"duration", 80}};
  return s;
}

}  // namespace

TEST_CASE("capture_data cleans and slices") {
  HistoryStore none;
  auto ptr = capture_data(none, bins_graph(10, 3), ServiceId::Ptr);
  CHECK(ptr.graph.twins.size() == 9);
  CHECK(ptr.dropped == 1);

  try {
    capture_data(none, bins_graph(2, 99), ServiceId::Sync);
    FAIL("sync capture without history");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientHistory);
  }

  SimConfig c = build_topology(SizeClass::Small);
  TwinGraph net = build_network_graph(c, standard_models(), 0);
  auto mm = capture_data(none, net, ServiceId::Mmtc);
  CHECK(mm.dropped == 0);
  CHECK(mm.graph == net);

  HistoryStore h;
  h.append(net);
  CHECK(capture_data(h, net, ServiceId::Sync).history.size() == 1);
}

TEST_CASE("run_mmtc covers the three load levels") {
  ScenarioSpec s;
  s.kind = ScenarioKind::HighDensity;
  s.weight_mode = WeightMode::Split;
  s.size_class = SizeClass::Medium;
  s.sim = {{"duration", 100}};
  RuleBackend rule;
  ServiceReport r = run_mmtc(s, rule);
  REQUIRE(r.metrics["levels"].size() == 3);
  std::vector<double> levels;
  double prev_hit = 2;
  for (const auto& l : r.metrics["levels"]) {
    levels.push_back(l["ul_fraction"].get<double>());
    CHECK(l["hit_rate"].get<double>() <= prev_hit);
    prev_hit = l["hit_rate"].get<double>();
    CHECK(l["priority"] == "DensityDeadline");
  }
  CHECK(levels == std::vector<double>{0.20, 0.45, 0.70});
  CHECK(r.csv_rows.size() == 3);

  s.service = ServiceId::Tic;
  CHECK_THROWS_AS(run_mmtc(s, rule), Error);
  CHECK_THROWS_AS(spec_from_json({{"sim", {{"duration", 0}}}}), Error);
}

TEST_CASE("TIC with a zero table and no exploration behaves like FIFO") {
  ScenarioSpec s = tic_spec();
  TicParams p;
  p.epsilon = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    SimConfig c = build_topology(s.size_class, s.sim, seed);
    TicPolicy greedy(p, 1, false);
    FifoPolicy fifo;
    CHECK(run_sim(c, greedy) == run_sim(c, fifo));
  }
}

TEST_CASE("TIC episode return equals hits minus drops") {
  ScenarioSpec s = tic_spec();
  TicParams p;
  TicPolicy learner(p, 5, true);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SimConfig c = build_topology(s.size_class, s.sim, seed);
    learner.begin_episode(c.n_gateways);
    SimMetrics m = run_sim(c, learner);
    CHECK(learner.episode_return() == static_cast<double>(m.deadline_hits) - static_cast<double>(m.dropped));
  }
  for (const auto& a : learner.table())
    for (const auto& b : a)
      for (const auto& c : b)
        for (double q : c) CHECK(std::isfinite(q));
}

TEST_CASE("run_tic flags an untrained policy and still evaluates") {
  ScenarioSpec s = tic_spec();
  ServiceReport r = run_tic(s, 0);
  REQUIRE(r.flags.size() == 1);
  CHECK(r.flags[0] == "untrained");
  CHECK(r.metrics["eval_seeds"] == 10);
  CHECK(r.metrics["wins"] == 10);  // untrained greedy policy is FIFO
  ServiceReport trained = run_tic(s, 30);
  CHECK(trained.flags.empty());
}

TEST_CASE("sync: full rate keeps H+R exact") {
  SyncExperimentConfig c;
  c.twinning_rate = 1.0;
  c.strategies = {Strategy::HR};
  auto curves = sync_curves(c);
  REQUIRE(curves[0].accuracy.size() == 12);
  for (double a : curves[0].accuracy) CHECK(a == 1.0);
  for (auto reads : curves[0].realtime_reads) CHECK(reads == c.world.n_twins);
}

TEST_CASE("sync: static worlds are predicted perfectly") {
  SyncExperimentConfig c;
  c.rounds = 1;
  c.world.drift_sigma = 0;
  c.world.reversion = 1.0;
  for (const auto& curve : sync_curves(c)) CHECK(curve.accuracy == std::vector<double>{1.0});

  c.rounds = 12;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    c.seed = seed;
    for (const auto& curve : sync_curves(c))
      for (std::size_t i = 1; i < curve.accuracy.size(); ++i) CHECK(curve.accuracy[i] >= curve.accuracy[i - 1]);
  }
}

TEST_CASE("sync report layout and accuracy-target stop") {
  SyncExperimentConfig c;
  ServiceReport r = run_right_time_sync(c);
  CHECK(r.csv_rows.size() == 36);
  CHECK(r.csv_header == std::vector<std::string>{"round", "strategy", "accuracy", "realtime_reads"});
  CHECK(r.metrics["H"]["realtime_reads"] == 0);
  CHECK(r.metrics["H+R"]["realtime_reads"].get<std::size_t>() < r.metrics["full_sync_reads"].get<std::size_t>());

  c.twinning_rate = 1.0;
  c.accuracy_target = 0.99;
  c.strategies = {Strategy::HR};
  CHECK(sync_curves(c)[0].accuracy.size() == 1);

  c.rounds = 0;
  CHECK_THROWS_AS(sync_curves(c), Error);
}

TEST_CASE("ptr examples") {
  PtrInstance in;
  in.bins = {bin("a", 1, 0, 0.2), bin("b", 2, 0, 0.3)};
  auto r = plan_route(in, 0.5);
  CHECK(r.order.empty());
  CHECK(r.length == 0.0);

  in.bins = {bin("far", 3, 0, 0.9), bin("near", 1, 0, 0.8)};
  r = plan_route(in, 0.5);
  CHECK(r.order == std::vector<std::string>{"near", "far"});
  CHECK(r.length == doctest::Approx(6.0));

  in.bins = {bin("low", 1, 1, 0.4), bin("high", 2, 2, 0.6)};
  in.coef_fill = 1;
  in.coef_rate = 0;
  r = plan_route(in, 0.5);
  CHECK(r.selected == std::vector<std::string>{"high"});

  in.bins = {bin("x", 1, 0, 0.7, 0.5)};
  r = plan_route(in, 0.8);
  CHECK(r.missed == 1);
  CHECK(r.missed_rate == 1.0);

  CHECK_THROWS_AS(plan_route(in, 1.0), Error);
  in.bins = {bin("bad", 0, 0, 1.5)};
  CHECK_THROWS_AS(plan_route(in, 0.5), Error);
}

TEST_CASE("ptr truck capacity splits trips") {
  PtrInstance in;
  in.truck_capacity = 1;
  in.bins = {bin("a", 1, 0, 0.9), bin("b", 2, 0, 0.9)};
  auto r = plan_route(in, 0.5);
  CHECK(r.trip_sizes == std::vector<std::size_t>{1, 1});
  CHECK(r.length == doctest::Approx(2 + 4));
}

TEST_CASE("ptr route validity and greedy bound on random instances") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    PtrInstance in = random_ptr_instance(10, seed);
    auto r = plan_route(in, 0.7);
    std::set<std::string> visited(r.order.begin(), r.order.end());
    CHECK(visited.size() == r.order.size());
    CHECK(std::set<std::string>(r.selected.begin(), r.selected.end()) == visited);

    std::map<std::string, const Bin*> by_id;
    for (const auto& b : in.bins) by_id[b.id] = &b;
    double len = 0, x = in.depot_x, y = in.depot_y;
    std::vector<std::array<double, 2>> pts;
    for (const auto& id : r.order) {
      const Bin* b = by_id.at(id);
      len += std::hypot(b->x - x, b->y - y);
      x = b->x;
      y = b->y;
      pts.push_back({b->x, b->y});
    }
    len += std::hypot(in.depot_x - x, in.depot_y - y);
    CHECK(r.length == doctest::Approx(len).epsilon(1e-12));
    if (pts.size() <= 8) CHECK(r.length <= 2 * oracle::brute_tour(in.depot_x, in.depot_y, pts) + 1e-9);
  }
}

TEST_CASE("ptr instance from captured twins") {
  TwinGraph g = bins_graph(5, 99);
  auto data = capture_data(HistoryStore{}, g, ServiceId::Ptr);
  PtrInstance in = ptr_instance_from(data);
  CHECK(in.bins.size() == 5);
  ServiceReport r = run_ptr(in, 0.25);
  CHECK(r.metrics["selected"] == 2);
  CHECK(r.csv_rows.size() == 2);
}
