// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failing criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "oracles.hpp"
#include "twinforge/error.hpp"
#include "twinforge/format.hpp"
#include "twinforge/kpi.hpp"
#include "twinforge/net_sim.hpp"
#include "twinforge/network_twin.hpp"
#include "twinforge/rng.hpp"
#include "twinforge/scenario.hpp"
#include "twinforge/services.hpp"
#include "twinforge/twin_json.hpp"

using namespace twinforge;
namespace fs = std::filesystem;

namespace {

int failures = 0;

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::cout << (pass ? "PASS" : "FAIL") << "  " << id << ". " << name << ": " << detail << std::endl;
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Independent weight checks, written against the constraint text rather than
// the library's own validator.
std::vector<std::string> check_weights(const WeightVector& w, PriorityPair pair) {
  std::vector<std::string> bad;
  const std::array<double, 4> x{w.rho, w.d, w.l, w.alpha};
  const double sum = x[0] + x[1] + x[2] + x[3];
  if (std::abs(sum - 1.0) > 1e-9) bad.push_back("sum " + num(sum, 12));
  for (double v : x)
    if (v < 0.05 - 1e-12) bad.push_back("floor " + num(v, 6));
  if (pair != PriorityPair::None) {
    const auto [a, b] = *kpis_of(pair);
    const auto ia = static_cast<std::size_t>(a), ib = static_cast<std::size_t>(b);
    for (std::size_t i = 0; i < 4; ++i) {
      if (i == ia || i == ib) continue;
      if (!(x[ia] > x[i] && x[ib] > x[i])) bad.push_back("dominance");
    }
  }
  return bad;
}

// ---- 1

void throughput_stability() {
  Stopwatch sw;
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::map<SizeClass, std::pair<double, double>> means;  // random, prioritized
  for (SizeClass size : {SizeClass::Medium, SizeClass::Large}) {
    std::vector<double> prioritized, random;
    for (std::uint64_t seed : seeds) {
      for (bool prio : {false, true}) {
        ScenarioSpec s;
        s.size_class = size;
        s.seed = seed;
        s.kind = prio ? ScenarioKind::HighDensity : ScenarioKind::Base;
        s.weight_mode = prio ? WeightMode::Split : WeightMode::Random;
        s.sim = {{"gateway_capacity", 6}, {"ul_fraction", 0.2}};
        const SimConfig topo = build_topology(size, s.sim, seed);
        RuleBackend rule;
        const GeneratedScenario g = generate(HistoryStore{}, build_network_graph(topo, standard_models(), 0), s, rule);
        if (prio && g.priority != PriorityPair::DensityDeadline)
          std::cout << "      note: prioritized run without DensityDeadline on seed " << seed << std::endl;
        const double cov = stability(run_sim(g.sim_config).throughput_series);
        (prio ? prioritized : random).push_back(cov);
      }
    }
    means[size] = {mean(random), mean(prioritized)};
  }
  const auto [lr, lp] = means[SizeClass::Large];
  const auto [mr, mp] = means[SizeClass::Medium];
  const double reduction = 1.0 - lp / lr;
  const bool pass = reduction >= 0.20 && mp < mr && sw.seconds() < 300;
  report(1, "throughput stability", pass,
         "large CoV random " + num(lr, 4) + " prioritized " + num(lp, 4) + " (reduction " + num(100 * reduction, 1) +
             "%, need >= 20%); medium random " + num(mr, 4) + " prioritized " + num(mp, 4) + "; " +
             num(sw.seconds(), 1) + " s");
}

// ---- 2

void sync_accuracy() {
  Stopwatch sw;
  const std::size_t worlds = 20, rounds = 12;
  std::map<Strategy, std::vector<double>> curve;  // mean accuracy per round
  for (Strategy s : {Strategy::H, Strategy::HR, Strategy::HRGAI}) curve[s].assign(rounds, 0.0);
  for (std::uint64_t seed = 1; seed <= worlds; ++seed) {
    SyncExperimentConfig c;
    c.seed = seed;
    c.rounds = rounds;
    c.twinning_rate = 0.8;
    for (const auto& sc : sync_curves(c))
      for (std::size_t r = 0; r < rounds; ++r) curve[sc.strategy][r] += sc.accuracy.at(r) / double(worlds);
  }
  const auto& h = curve[Strategy::H];
  const auto& hr = curve[Strategy::HR];
  const auto& gai = curve[Strategy::HRGAI];
  const bool ordering = gai.back() >= hr.back() && hr.back() >= h.back();
  const bool final_ok = gai.back() >= 0.90;
  const bool band = std::abs(hr[4] - 0.50) <= 0.15 && std::abs(gai[4] - 0.50) <= 0.15;
  double margin = 0;
  {
    const std::size_t from = rounds - rounds / 3;
    std::vector<double> g, best;
    for (std::size_t r = from; r < rounds; ++r) {
      g.push_back(gai[r]);
      best.push_back(std::max(h[r], hr[r]));
    }
    margin = mean(g) - mean(best);
  }
  const bool margin_ok = margin >= 0.10;
  const bool pass = ordering && final_ok && band && margin_ok && sw.seconds() < 120;
  report(2, "synchronization accuracy", pass,
         std::string("final H ") + num(h.back(), 3) + " H+R " + num(hr.back(), 3) + " H+R+GAI " + num(gai.back(), 3) +
             " [ordering " + (ordering ? "ok" : "broken") + ", GAI >= 0.90 " + (final_ok ? "ok" : "no") +
             "]; round 5 H+R " + num(hr[4], 3) + " H+R+GAI " + num(gai[4], 3) + " [0.50 +/- 0.15 " +
             (band ? "ok" : "no") + "]; final-third margin " + num(margin, 3) + " [>= 0.10 " +
             (margin_ok ? "ok" : "no") + "]; " + num(sw.seconds(), 1) + " s");
}

// ---- 3

void optimizer_oracle() {
  Stopwatch sw;
  Rng rng(2024);
  double worst = 0;
  std::size_t cases = 0;
  for (int i = 0; i < 100; ++i) {
    KpiVector t{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
    for (PriorityPair p : {PriorityPair::DensityDeadline, PriorityPair::LatencyDeadline, PriorityPair::DensityBuffer}) {
      const WeightVector w = solve_max_weights(t, p);
      const auto [a, b] = *kpis_of(p);
      const double got = objective(w, t);
      const double want =
          oracle::grid_best({t.rho, t.d, t.l, t.alpha}, static_cast<int>(a), static_cast<int>(b));
      worst = std::max(worst, std::abs(got - want));
      ++cases;
    }
  }
  report(3, "optimizer oracle equivalence", worst <= 1e-6 && sw.seconds() < 30,
         std::to_string(cases) + " cases, worst objective gap " + num(worst, 9) + " (tolerance 1e-6); " +
             num(sw.seconds(), 1) + " s");
}

// ---- 4

std::string valid_scenario_reply(const ScenarioSpec& s) {
  RuleBackend rule;
  const SimConfig topo = build_topology(s.size_class, s.sim, s.seed);
  return to_json(generate(HistoryStore{}, build_network_graph(topo, standard_models(), 0), s, rule)).dump();
}

ScenarioSpec random_spec(Rng& rng) {
  ScenarioSpec s;
  s.kind = static_cast<ScenarioKind>(rng.index(3));
  s.size_class = rng.bernoulli(0.8) ? SizeClass::Small : SizeClass::Medium;
  s.weight_mode = s.kind == ScenarioKind::Base ? WeightMode::Random
                                               : (rng.bernoulli(0.5) ? WeightMode::Split : WeightMode::Optimize);
  s.seed = rng.next();
  if (rng.bernoulli(0.5)) s.targets.density = rng.uniform(0, 200);
  if (rng.bernoulli(0.5)) s.targets.latency_ms = rng.uniform(0, 3);
  if (rng.bernoulli(0.5)) s.targets.accuracy = rng.uniform(0.8, 1.0);
  s.sim = {{"duration", 20}};
  return s;
}

void constraint_suite() {
  Stopwatch sw;
  Rng rng(77);
  std::size_t vectors = 0, violations = 0;
  std::string first;
  auto check = [&](const WeightVector& w, PriorityPair p, const char* path) {
    ++vectors;
    const auto bad = check_weights(w, p);
    if (!bad.empty()) {
      ++violations;
      if (first.empty()) first = std::string(path) + ": " + bad.front();
    }
  };
  for (int i = 0; i < 1000; ++i) {
    const ScenarioSpec s = random_spec(rng);
    check(random_weights(s.seed), PriorityPair::None, "random");
    KpiVector t{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
    for (PriorityPair p : {PriorityPair::DensityDeadline, PriorityPair::LatencyDeadline, PriorityPair::DensityBuffer}) {
      check(split_weights(p, 0.7), p, "split");
      check(split_weights(p, rng.uniform(0.5, 0.9)), p, "split");
      check(solve_max_weights(t, p), p, "optimize");
    }
    const SimConfig topo = build_topology(s.size_class, s.sim, s.seed);
    const TwinGraph realtime = build_network_graph(topo, standard_models(), 0);
    RuleBackend rule;
    const GeneratedScenario a = generate(HistoryStore{}, realtime, s, rule);
    check(a.weights, a.priority, "generate");
    MockBackend broken({"{\"weights\": {\"rho\": 0.9}}"});
    const GeneratedScenario b = generate(HistoryStore{}, realtime, s, broken);
    check(b.weights, b.priority, "generate fallback");
    check(b.sim_config.weights, b.priority, "generate fallback sim");
  }
  report(4, "constraint suite", violations == 0,
         std::to_string(vectors) + " weight vectors from 1000 specs, " + std::to_string(violations) + " violations" +
             (first.empty() ? "" : " (first: " + first + ")") + "; " + num(sw.seconds(), 1) + " s");
}

// ---- 5

void simulator_oracle() {
  Stopwatch sw;
  SimConfig c;
  c.n_sensors = 2;
  c.n_gateways = 1;
  c.ul_fraction = 1.0;
  c.gateway_capacity = 1;
  c.min_deadline = c.deadline = 2;
  c.rearrival_probability = 0.0;
  c.duration = 5;
  const SimMetrics m = run_sim(c);
  const bool trace = m.delivered == 2 && m.dropped == 0 && m.throughput_series == std::vector<std::uint32_t>{1, 1, 0, 0, 0};

  Rng rng(5150);
  std::size_t broken = 0;
  for (int i = 0; i < 1000; ++i) {
    SimConfig r;
    r.n_sensors = 1 + rng.index(80);
    r.n_gateways = 1 + rng.index(6);
    r.ul_fraction = rng.uniform();
    r.gateway_capacity = 1 + static_cast<std::uint32_t>(rng.index(6));
    r.buffer_capacity = 1 + static_cast<std::uint32_t>(rng.index(24));
    r.min_deadline = static_cast<std::uint32_t>(rng.index(4));
    r.deadline = r.min_deadline + static_cast<std::uint32_t>(rng.index(12));
    r.duration = 1 + static_cast<std::uint32_t>(rng.index(80));
    r.rearrival_probability = rng.uniform();
    r.dl_probability = rng.uniform();
    r.seed = rng.next();
    r.weights = random_weights(rng.next());
    const SimMetrics x = run_sim(r);
    if (x.delivered + x.dropped != x.generated) ++broken;
  }
  report(5, "simulator micro-oracle", trace && broken == 0,
         std::string("hand trace ") + (trace ? "exact" : "MISMATCH") + "; conservation broken on " +
             std::to_string(broken) + " of 1000 configs; " + num(sw.seconds(), 1) + " s");
}

// ---- 6

std::map<std::string, std::string> csv_files(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().extension() != ".csv") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[fs::relative(e.path(), dir).string()] = ss.str();
  }
  return out;
}

void determinism() {
  Stopwatch sw;
  const fs::path root = fs::temp_directory_path() / ("twinforge-accept-" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path spec = root / "spec.json";
  std::ofstream(spec) << R"({
  "scenario": {"kind": "HighDensity", "service": "mmtc", "seed": 4},
  "sim": {"duration": 100},
  "tic": {"episodes": 20, "eval_seeds": 3},
  "ptr": {"n_bins": 20},
  "sync": {"rounds": 12},
  "experiment": {"kind": "all", "seeds": "1..3", "sizes": ["small", "medium"]}
})";
  const std::string bin = TWINFORGE_BIN;
  const std::string a = (root / "a").string(), b = (root / "b").string();
  const int ra = std::system((bin + " run " + spec.string() + " --out " + a + " --parallel 1 > /dev/null").c_str());
  const int rb = std::system((bin + " run " + spec.string() + " --out " + b + " --parallel 4 > /dev/null").c_str());
  bool same = false;
  std::size_t n = 0;
  if (ra == 0 && rb == 0) {
    const auto fa = csv_files(a), fb = csv_files(b);
    same = fa == fb && !fa.empty();
    n = fa.size();
  }
  fs::remove_all(root);
  report(6, "determinism", same,
         std::to_string(n) + " metric CSVs compared across two `twinforge run` invocations (serial vs 4 workers): " +
             (same ? "bit-identical" : "DIFFER or run failed") + "; " + num(sw.seconds(), 1) + " s");
}

// ---- 7

void tic_improvement() {
  Stopwatch sw;
  ScenarioSpec s;
  s.kind = ScenarioKind::HighDensity;
  s.weight_mode = WeightMode::Split;
  s.service = ServiceId::Tic;
  s.size_class = SizeClass::Medium;
  s.seed = 1;
  s.sim = {{"ul_fraction", 0.2}, {"min_deadline", 0}, {"deadline", 4}};
  TicParams p;  // defaults: 1000 episodes
  const TicResult r = tic_train_and_evaluate(s, p);
  const bool pass = r.wins >= 8 && p.episodes <= 2000 && sw.seconds() < 120;
  report(7, "TIC improvement", pass,
         "policy loss <= FIFO on " + std::to_string(r.wins) + "/" + std::to_string(r.policy_loss.size()) +
             " held-out seeds (need >= 8), mean loss " + num(mean(r.policy_loss), 4) + " vs FIFO " +
             num(mean(r.fifo_loss), 4) + ", " + std::to_string(p.episodes) + " episodes; " + num(sw.seconds(), 1) +
             " s");
}

// ---- 8

std::string mutate(const std::string& valid, Rng& rng) {
  nlohmann::json j = nlohmann::json::parse(valid);
  switch (rng.index(8)) {
    case 0: {  // garbage bytes
      std::string s;
      const std::size_t n = rng.index(60);
      for (std::size_t i = 0; i < n; ++i) s += static_cast<char>(1 + rng.index(126));
      return s;
    }
    case 1:  // truncated document
      return valid.substr(0, rng.index(valid.size()));
    case 2: {  // missing field
      const char* keys[] = {"predicted_graph", "sim_config", "weights", "priority", "provenance"};
      j.erase(keys[rng.index(5)]);
      return j.dump();
    }
    case 3:  // weights off the simplex
      j["weights"]["rho"] = j["weights"]["rho"].get<double>() + 0.1 + rng.uniform();
      return j.dump();
    case 4: {  // below the floor, sum kept at 1
      const double alpha = j["weights"]["alpha"].get<double>();
      j["weights"]["rho"] = j["weights"]["rho"].get<double>() + alpha - 0.01;
      j["weights"]["alpha"] = 0.01;
      return j.dump();
    }
    case 5:  // wrong type
      j["sim_config"] = "fast";
      return j.dump();
    case 6:  // priority that disagrees with the spec
      j["priority"] = j["priority"] == "LatencyDeadline" ? "DensityBuffer" : "LatencyDeadline";
      return j.dump();
    default:  // invalid simulator config
      j["sim_config"]["duration"] = 0;
      return j.dump();
  }
}

void backend_resilience() {
  Stopwatch sw;
  Rng rng(808);
  std::size_t escaped = 0, labelled = 0;
  const std::size_t n = 500;
  for (std::size_t i = 0; i < n; ++i) {
    ScenarioSpec s;
    s.kind = i % 2 ? ScenarioKind::HighDensity : ScenarioKind::Synchronization;
    s.weight_mode = WeightMode::Split;
    s.seed = 1 + i;
    s.sim = {{"duration", 20}};
    if (s.kind == ScenarioKind::Synchronization) s.targets.accuracy = 0.99;
    const std::string reply = mutate(valid_scenario_reply(s), rng);
    MockBackend mock({reply});
    const SimConfig topo = build_topology(s.size_class, s.sim, s.seed);
    const GeneratedScenario g = generate(HistoryStore{}, build_network_graph(topo, standard_models(), 0), s, mock);
    if (g.backend_id == "rule(fallback)") ++labelled;
    if (!validate_scenario(g).empty() || !check_weights(g.weights, g.priority).empty()) ++escaped;
  }
  report(8, "backend resilience", escaped == 0 && labelled == n,
         std::to_string(n) + " malformed mock replies: " + std::to_string(labelled) + " fell back with backend_id " +
             "rule(fallback), " + std::to_string(escaped) + " invalid scenarios escaped; " + num(sw.seconds(), 1) + " s");
}

// ---- 9

void ptr_oracle() {
  Stopwatch sw;
  std::size_t compared = 0, over = 0, invalid = 0;
  double worst_ratio = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    PtrInstance in = random_ptr_instance(12, seed);
    in.truck_capacity = seed % 5 == 0 ? 3 : 0;
    const PtrRoute r = plan_route(in, 0.6);
    std::map<std::string, const Bin*> by_id;
    for (const Bin& b : in.bins) by_id[b.id] = &b;
    std::set<std::string> seen(r.order.begin(), r.order.end());
    bool ok = seen.size() == r.order.size() && seen == std::set<std::string>(r.selected.begin(), r.selected.end());
    for (const Bin& b : in.bins) {
      const bool chosen = in.coef_fill * b.fill_level + in.coef_rate * b.fill_rate >= 0.6;
      ok = ok && chosen == (seen.count(b.id) == 1);
    }
    // Length recomputed from the visiting order and trip split.
    double len = 0, x = in.depot_x, y = in.depot_y;
    std::size_t k = 0;
    for (std::size_t trip : r.trip_sizes) {
      for (std::size_t i = 0; i < trip && k < r.order.size(); ++i, ++k) {
        const Bin* b = by_id.at(r.order[k]);
        len += std::hypot(b->x - x, b->y - y);
        x = b->x;
        y = b->y;
      }
      len += std::hypot(in.depot_x - x, in.depot_y - y);
      x = in.depot_x;
      y = in.depot_y;
      if (in.truck_capacity) ok = ok && trip <= in.truck_capacity;
    }
    ok = ok && k == r.order.size() && std::abs(len - r.length) <= 1e-9 * std::max(1.0, len);
    if (!ok) ++invalid;
    if (in.truck_capacity == 0 && r.selected.size() <= 8) {
      std::vector<std::array<double, 2>> pts;
      for (const auto& id : r.order) pts.push_back({by_id.at(id)->x, by_id.at(id)->y});
      const double best = oracle::brute_tour(in.depot_x, in.depot_y, pts);
      ++compared;
      if (best > 0) worst_ratio = std::max(worst_ratio, r.length / best);
      if (r.length > 2 * best + 1e-9) ++over;
    }
  }
  report(9, "PTR oracle", over == 0 && invalid == 0 && compared > 0,
         std::to_string(compared) + " instances with <= 8 selected bins compared to brute force, worst ratio " +
             num(worst_ratio, 3) + " (limit 2), " + std::to_string(over) + " over; " + std::to_string(invalid) +
             " of 50 routes invalid; " + num(sw.seconds(), 1) + " s");
}

}  // namespace

int main() {
  const std::vector<void (*)()> criteria{throughput_stability, sync_accuracy,  optimizer_oracle,
                                         constraint_suite,     simulator_oracle, determinism,
                                         tic_improvement,      backend_resilience, ptr_oracle};
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    try {
      criteria[i]();
    } catch (const std::exception& e) {
      report(static_cast<int>(i + 1), "criterion", false, std::string("threw: ") + e.what());
    }
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failures;
}
