#include <algorithm>
#include <map>

#include "twinforge/error.hpp"
#include "twinforge/format.hpp"
#include "twinforge/network_twin.hpp"
#include "twinforge/services.hpp"

namespace twinforge {

namespace {

void drift(DigitalTwin& twin, const SyncWorldParams& p, Rng& rng, Timestamp ts) {
  for (auto& [name, pv] : twin.properties) {
    if (pv.kind != PropertyKind::Dynamic || !is_number(pv.value)) continue;
    const double x = std::get<double>(pv.value);
    const double delta = (p.reversion - 1.0) * (x - p.mean) + p.drift_sigma * rng.normal();
    if (delta == 0.0) continue;
    pv.value = x + delta;
    pv.last_updated = ts;
  }
  for (auto& c : twin.components) drift(c, p, rng, ts);
}

Timestamp latest_update(const DigitalTwin& twin) {
  Timestamp t = 0;
  for (const auto& [name, pv] : twin.properties) t = std::max(t, pv.last_updated);
  for (const auto& c : twin.components) t = std::max(t, latest_update(c));
  return t;
}

}  // namespace

SyncExperimentConfig sync_config_from_json(const nlohmann::json& j, std::uint64_t seed) {
  SyncExperimentConfig c;
  c.seed = seed;
  if (j.is_null()) return c;
  try {
    c.rounds = j.value("rounds", c.rounds);
    c.twinning_rate = j.value("twinning_rate", c.twinning_rate);
    c.tolerance = j.value("tolerance", c.tolerance);
    if (j.contains("strategies")) {
      c.strategies.clear();
      for (const auto& s : j.at("strategies")) c.strategies.push_back(strategy_from_string(s.get<std::string>()));
    }
    if (j.contains("accuracy_target")) c.accuracy_target = j.at("accuracy_target").get<double>();
    const auto w = j.value("world", nlohmann::json::object());
    c.world.n_twins = w.value("n_twins", c.world.n_twins);
    c.world.drift_sigma = w.value("drift_sigma", c.world.drift_sigma);
    c.world.reversion = w.value("reversion", c.world.reversion);
    c.world.mean = w.value("mean", c.world.mean);
    c.world.initial_spread = w.value("initial_spread", c.world.initial_spread);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("sync section: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return c;
}

SyncWorld::SyncWorld(const SyncWorldParams& p, std::uint64_t seed) : params_(p), rng_(seed) {
  const ModelRegistry registry = standard_models();
  for (std::size_t i = 0; i < p.n_twins; ++i) {
    DigitalTwin t{"node-" + std::to_string(i), "sensor", {}, {}};
    t.properties["gateway"] = {Value{std::string("gw-0")}, PropertyKind::Static, 0};
    t.properties["load"] = {Value{rng_.uniform(p.mean - p.initial_spread, p.mean + p.initial_spread)},
                            PropertyKind::Dynamic, 0};
    DigitalTwin bat{"battery", "battery", {}, {}};
    bat.properties["level"] = {Value{rng_.uniform(p.mean - p.initial_spread, p.mean + p.initial_spread)},
                               PropertyKind::Dynamic, 0};
    t.components.push_back(std::move(bat));
    truth_ = add_twin(std::move(truth_), std::move(t), registry);
  }
}

void SyncWorld::step() {
  truth_.timestamp += 1000;
  for (auto& [id, twin] : truth_.twins) drift(twin, params_, rng_, truth_.timestamp);
}

std::vector<SyncCurve> sync_curves(const SyncExperimentConfig& cfg) {
  if (cfg.rounds < 1) throw Error(ErrorCode::InvalidConfig, "rounds must be >= 1");
  if (!(cfg.twinning_rate > 0 && cfg.twinning_rate <= 1)) throw Error(ErrorCode::InvalidConfig, "twinning rate outside (0,1]");
  if (!(cfg.tolerance >= 0)) throw Error(ErrorCode::InvalidConfig, "tolerance must be >= 0");

  SyncWorld world(cfg.world, mix_seed(cfg.seed, 0));
  std::vector<TwinGraph> truths{world.truth()};
  for (std::size_t r = 0; r < cfg.rounds; ++r) {
    world.step();
    truths.push_back(world.truth());
  }

  std::vector<SyncCurve> curves;
  for (Strategy s : cfg.strategies) {
    SyncCurve curve{s, {}, {}};
    HistoryStore history;
    history.append(truths[0]);  // the twin starts fully synchronized
    std::map<std::string, Timestamp> synced_at;
    for (const auto& [id, twin] : truths[0].twins) synced_at[id] = truths[0].timestamp;
    for (std::size_t r = 1; r <= cfg.rounds; ++r) {
      PredictionStats stats;
      TwinGraph pred = predict_next_state(history.window(history.size()), truths[r], s, cfg.twinning_rate,
                                          mix_seed(cfg.seed, r), &stats);
      if (s != Strategy::H) {
        // A twin synced earlier stays fresh until its physical counterpart changes.
        for (const auto& id : stats.synced) synced_at[id] = truths[r].timestamp;
        for (auto& [id, twin] : pred.twins) {
          auto it = synced_at.find(id);
          const DigitalTwin* real = truths[r].find(id);
          if (it != synced_at.end() && real && latest_update(*real) <= it->second) twin = *real;
        }
      }
      const double acc = twin_accuracy(pred, truths[r], cfg.tolerance);
      curve.accuracy.push_back(acc);
      curve.realtime_reads.push_back(stats.realtime_reads);
      history.append(pred);
      if (cfg.accuracy_target && acc >= *cfg.accuracy_target) break;
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

ServiceReport run_right_time_sync(const SyncExperimentConfig& cfg) {
  const auto curves = sync_curves(cfg);
  ServiceReport r;
  r.service = "sync";
  r.seed = cfg.seed;
  nlohmann::json strategies = nlohmann::json::array();
  for (Strategy s : cfg.strategies) strategies.push_back(to_string(s));
  r.config = {{"rounds", cfg.rounds},
              {"twinning_rate", cfg.twinning_rate},
              {"strategies", strategies},
              {"tolerance", cfg.tolerance},
              {"world",
               {{"n_twins", cfg.world.n_twins},
                {"drift_sigma", cfg.world.drift_sigma},
                {"reversion", cfg.world.reversion},
                {"mean", cfg.world.mean},
                {"initial_spread", cfg.world.initial_spread}}}};
  if (cfg.accuracy_target) r.config["accuracy_target"] = *cfg.accuracy_target;

  r.csv_header = {"round", "strategy", "accuracy", "realtime_reads"};
  for (const auto& c : curves) {
    const std::string name(to_string(c.strategy));
    std::size_t reads = 0;
    for (std::size_t i = 0; i < c.accuracy.size(); ++i) {
      reads += c.realtime_reads[i];
      r.csv_rows.push_back({std::to_string(i + 1), name, num(c.accuracy[i]), std::to_string(c.realtime_reads[i])});
    }
    r.metrics[name] = {{"accuracy", c.accuracy},
                       {"final_accuracy", c.accuracy.back()},
                       {"rounds_run", c.accuracy.size()},
                       {"reads_per_round", c.realtime_reads},
                       {"realtime_reads", reads}};
  }
  // Reads a continuously synchronized twin would have made, for the trade-off.
  r.metrics["full_sync_reads"] = cfg.world.n_twins * cfg.rounds;
  return r;
}

}  // namespace twinforge
