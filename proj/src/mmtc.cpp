#include "twinforge/error.hpp"
#include "twinforge/format.hpp"
#include "twinforge/network_twin.hpp"
#include "twinforge/services.hpp"

namespace twinforge {

std::vector<MmtcLevel> mmtc_sweep(const ScenarioSpec& spec, GeneratorBackend& backend) {
  const ModelRegistry registry = standard_models();
  std::vector<MmtcLevel> out;
  for (double f : kMmtcLevels) {
    ScenarioSpec s = spec;
    s.sim["ul_fraction"] = f;
    const SimConfig topology = build_topology(s.size_class, s.sim, s.seed);
    const TwinGraph realtime = build_network_graph(topology, registry, 0);

    MmtcLevel level;
    level.ul_fraction = f;
    level.scenario = generate(HistoryStore{}, realtime, s, backend);
    level.metrics = run_sim(level.scenario.sim_config);
    try {
      level.cov = stability(level.metrics.throughput_series);
    } catch (const Error&) {
      level.cov.reset();
    }
    if (level.metrics.active_sensors > 0)
      level.coverage = static_cast<double>(level.metrics.served_sensors) / static_cast<double>(level.metrics.active_sensors);
    if (level.metrics.deadline_total > 0)
      level.hit_rate = static_cast<double>(level.metrics.deadline_hits) / static_cast<double>(level.metrics.deadline_total);
    out.push_back(std::move(level));
  }
  return out;
}

ServiceReport run_mmtc(const ScenarioSpec& spec, GeneratorBackend& backend) {
  if (spec.service != ServiceId::Mmtc) throw Error(ErrorCode::InvalidConfig, "run_mmtc needs service mmtc");
  ServiceReport r;
  r.service = "mmtc";
  r.seed = spec.seed;
  r.config = to_json(spec);
  r.csv_header = {"ul_fraction", "priority", "backend_id", "throughput_cov", "coverage", "hit_rate", "loss_rate",
                  "mean_latency_ms", "mean_occupancy"};
  nlohmann::json levels = nlohmann::json::array();
  for (const MmtcLevel& l : mmtc_sweep(spec, backend)) {
    const double latency_ms = l.metrics.mean_latency_slots() * l.scenario.sim_config.slot_ms;
    levels.push_back({{"ul_fraction", l.ul_fraction},
                      {"priority", to_string(l.scenario.priority)},
                      {"weights", to_json(l.scenario.weights)},
                      {"backend_id", l.scenario.backend_id},
                      {"throughput_cov", l.cov ? nlohmann::json(*l.cov) : nlohmann::json(nullptr)},
                      {"coverage", l.coverage},
                      {"hit_rate", l.hit_rate},
                      {"loss_rate", l.metrics.loss_rate()},
                      {"mean_latency_ms", latency_ms},
                      {"summary", summary_json(l.metrics)}});
    r.csv_rows.push_back({num(l.ul_fraction, 2), std::string(to_string(l.scenario.priority)), l.scenario.backend_id,
                          l.cov ? num(*l.cov) : "nan", num(l.coverage), num(l.hit_rate), num(l.metrics.loss_rate()),
                          num(latency_ms), num(l.metrics.mean_buffer_occupancy)});
  }
  r.metrics["levels"] = levels;
  return r;
}

}  // namespace twinforge
