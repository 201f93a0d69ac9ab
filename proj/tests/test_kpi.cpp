#include <doctest.h>

#include "oracles.hpp"
#include "twinforge/error.hpp"
#include "twinforge/kpi.hpp"
#include "twinforge/rng.hpp"

using namespace twinforge;

namespace {

RawMeasurements perfect() {
  RawMeasurements r;
  r.served_devices = r.total_devices = 1000;
  r.deadline_hits = r.deadline_total = 500;
  return r;
}

oracle::Vec4 arr(const KpiVector& k) { return {k.rho, k.d, k.l, k.alpha}; }

int idx(KpiId id) { return static_cast<int>(id); }

void check_admissible(const WeightVector& w) {
  INFO("weights " << to_json(w).dump());
  CHECK(weight_violations(w).empty());
}

}  // namespace

TEST_CASE("normalize_kpis") {
  CHECK(normalize_kpis(perfect()) == KpiVector{1, 1, 1, 1});
  RawMeasurements r = perfect();
  r.served_devices = 800;
  CHECK(normalize_kpis(r).rho == doctest::Approx(0.8));
  r = perfect();
  r.mean_latency_ms = 0.9;
  r.latency_budget_ms = 9.0;
  CHECK(normalize_kpis(r).l == doctest::Approx(0.9).epsilon(1e-12));
  r.mean_latency_ms = 20;
  CHECK(normalize_kpis(r).l == 0.0);
  r = perfect();
  r.total_devices = 0;
  r.served_devices = 0;
  CHECK_THROWS_AS(normalize_kpis(r), Error);
}

TEST_CASE("select_priority follows case order") {
  Thresholds th;
  RawMeasurements r;
  r.device_density = 1000;
  CHECK(select_priority(r, th) == PriorityPair::DensityDeadline);
  r.device_density = 50;
  r.mean_latency_ms = 0.5;
  CHECK(select_priority(r, th) == PriorityPair::LatencyDeadline);
  r.mean_latency_ms = 1.0;
  r.accuracy = 0.90;
  CHECK(select_priority(r, th) == PriorityPair::None);
  r.accuracy = 0.98;
  CHECK(select_priority(r, th) == PriorityPair::DensityBuffer);
  r.device_density = 51;
  r.mean_latency_ms = 0.1;
  CHECK(select_priority(r, th) == PriorityPair::DensityDeadline);
}

TEST_CASE("assign_weights split and random") {
  KpiVector k{0.5, 0.5, 0.5, 0.5};
  auto w = assign_weights(PriorityPair::DensityDeadline, WeightMode::Split, k, 1);
  CHECK(w.rho == doctest::Approx(0.35));
  CHECK(w.d == doctest::Approx(0.35));
  CHECK(w.l == doctest::Approx(0.15));
  CHECK(w.alpha == doctest::Approx(0.15));
  check_admissible(w);

  w = assign_weights(PriorityPair::LatencyDeadline, WeightMode::Split, k, 1);
  CHECK(w.rho == doctest::Approx(0.15));
  CHECK(w.d == doctest::Approx(0.35));
  CHECK(w.l == doctest::Approx(0.35));
  CHECK(w.alpha == doctest::Approx(0.15));

  auto r1 = assign_weights(PriorityPair::None, WeightMode::Split, k, 42);
  auto r2 = assign_weights(PriorityPair::None, WeightMode::Split, k, 42);
  CHECK(r1 == r2);
  CHECK(std::abs(r1.sum() - 1.0) <= 1e-9);
  check_admissible(r1);
  CHECK(assign_weights(PriorityPair::None, WeightMode::Split, k, 43) != r1);

  OptimizerParams bad;
  bad.priority_share = 0.5;
  CHECK_THROWS_AS(assign_weights(PriorityPair::DensityBuffer, WeightMode::Split, k, 1, bad), Error);
  bad.priority_share = 0.95;  // remainder 0.025 each, below the floor
  CHECK_THROWS_AS(assign_weights(PriorityPair::DensityBuffer, WeightMode::Split, k, 1, bad), Error);
}

TEST_CASE("objective") {
  CHECK(objective({0.25, 0.25, 0.25, 0.25}, {0.8, 0.8, 0.8, 0.8}) == doctest::Approx(0.8));
  CHECK(objective({0.35, 0.35, 0.15, 0.15}, {0.9, 0.8, 0.5, 0.6}) == doctest::Approx(0.76).epsilon(1e-12));
  try {
    objective({0.5, 0.5, 0.0, 0.0}, {1, 1, 1, 1});
    FAIL("zero weight accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvariantViolation);
  }
  CHECK_THROWS_AS(objective({0.5, 0.5, 0.5, 0.5}, {1, 1, 1, 1}), Error);
}

TEST_CASE("objective is affine in the KPI vector and monotone") {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    WeightVector w = random_weights(rng.next());
    KpiVector a{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
    KpiVector b{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
    double s = rng.uniform();
    KpiVector mix;
    for (KpiId id : kAllKpis) mix[id] = s * a[id] + (1 - s) * b[id];
    CHECK(objective(w, mix) == doctest::Approx(s * objective(w, a) + (1 - s) * objective(w, b)).epsilon(1e-12));
    KpiVector up = a;
    KpiId id = kAllKpis[rng.index(4)];
    up[id] = std::min(1.0, up[id] + rng.uniform() * 0.5);
    CHECK(objective(w, up) >= objective(w, a));
  }
}

TEST_CASE("solve_max_weights") {
  KpiVector t{0.9, 0.8, 0.5, 0.6};
  auto w = solve_max_weights(t, PriorityPair::DensityDeadline, 0.05, 0.10);
  CHECK(w.rho == doctest::Approx(0.80));
  CHECK(w.d == doctest::Approx(0.10));
  CHECK(w.l == doctest::Approx(0.05));
  CHECK(w.alpha == doctest::Approx(0.05));
  CHECK(objective(w, t) == doctest::Approx(0.855).epsilon(1e-12));
  // Frozen from the grid oracle.
  CHECK(oracle::grid_best(arr(t), 0, 1) == doctest::Approx(0.855).epsilon(1e-12));

  auto tie = solve_max_weights({0.7, 0.7, 0.1, 0.2}, PriorityPair::DensityDeadline);
  CHECK(tie.rho == doctest::Approx(0.45));
  CHECK(tie.d == doctest::Approx(0.45));

  try {
    solve_max_weights(t, PriorityPair::DensityDeadline, 0.3, 0.3);
    FAIL("infeasible floors accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InfeasibleFloors);
  }
}

TEST_CASE("solve_max_weights matches the grid oracle") {
  Rng rng(2024);
  for (int i = 0; i < 40; ++i) {
    KpiVector t{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
    for (auto p : {PriorityPair::DensityDeadline, PriorityPair::LatencyDeadline, PriorityPair::DensityBuffer}) {
      auto [x, y] = *kpis_of(p);
      WeightVector w = solve_max_weights(t, p);
      check_admissible(w);
      CHECK(std::abs(objective(w, t) - oracle::grid_best(arr(t), idx(x), idx(y))) <= 1e-6);
    }
  }
}

TEST_CASE("weight_violations reports every broken constraint") {
  CHECK(weight_violations({0.35, 0.35, 0.15, 0.15, PriorityPair::DensityDeadline}).empty());
  auto v = weight_violations({0.4, 0.4, 0.2, 0.2, PriorityPair::None});
  REQUIRE(v.size() == 1);
  CHECK(v[0] == "sum: sum=1.2");
  v = weight_violations({0.2, 0.35, 0.3, 0.15, PriorityPair::DensityDeadline});
  REQUIRE(v.size() == 1);
  CHECK(v[0].rfind("dominance: dominance broken", 0) == 0);
  v = weight_violations({0.5, 0.5, 0.0, 0.2, PriorityPair::DensityDeadline});
  CHECK(v.size() == 2);
}

TEST_CASE("weights json round trip") {
  WeightVector w{0.35, 0.35, 0.15, 0.15, PriorityPair::DensityBuffer};
  CHECK(weights_from_json(to_json(w)) == w);
  auto j = to_json(KpiVector{0.1, 0.2, 0.3, 0.4});
  CHECK(j.contains("rho"));
  CHECK(j.contains("alpha"));
}
