#include "twinforge/scenario.hpp"

#include <cstdlib>

#include "twinforge/error.hpp"
#include "twinforge/network_twin.hpp"
#include "twinforge/rng.hpp"
#include "twinforge/twin_json.hpp"

namespace twinforge {

using nlohmann::json;

json to_json(const GeneratedScenario& s) {
  return {{"predicted_graph", to_json(s.predicted_graph)},
          {"sim_config", to_json(s.sim_config)},
          {"weights", to_json(s.weights)},
          {"priority", to_string(s.priority)},
          {"provenance", to_string(s.provenance)},
          {"backend_id", s.backend_id}};
}

GeneratedScenario scenario_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "scenario must be a JSON object");
  for (const char* key : {"predicted_graph", "sim_config", "weights", "priority", "provenance"})
    if (!j.contains(key)) throw Error(ErrorCode::ParseError, std::string("scenario lacks ") + key);
  try {
    GeneratedScenario s;
    s.predicted_graph = graph_from_json(j.at("predicted_graph"));
    s.sim_config = sim_config_from_json(j.at("sim_config"));
    s.weights = weights_from_json(j.at("weights"));
    s.priority = priority_from_string(j.at("priority").get<std::string>());
    s.provenance = strategy_from_string(j.at("provenance").get<std::string>());
    s.backend_id = j.value("backend_id", std::string{});
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("scenario: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseError) throw;
    throw Error(ErrorCode::ParseError, e.what());
  }
}

std::vector<std::string> validate_scenario(const GeneratedScenario& s, double w_min) {
  std::vector<std::string> v = weight_violations(s.weights, w_min);
  if (s.weights.prioritized != PriorityPair::None && s.weights.prioritized != s.priority)
    v.push_back("priority: weights prioritize " + std::string(to_string(s.weights.prioritized)) + " but scenario selects " +
                std::string(to_string(s.priority)));
  for (const auto& c : config_violations(s.sim_config)) v.push_back("sim: " + c);
  if (!(s.sim_config.weights == s.weights)) v.push_back("sim: weights differ from scenario weights");
  const TwinGraph& g = s.predicted_graph;
  if (g.timestamp < 0) v.push_back("graph: negative timestamp");
  for (const auto& [id, t] : g.twins)
    if (id != t.twin_id) v.push_back("graph: key " + id + " holds twin " + t.twin_id);
  for (const auto& r : g.relationships) {
    if (!g.find(r.source_id) || !g.find(r.target_id))
      v.push_back("graph: dangling relationship " + r.source_id + " -> " + r.target_id);
    if (r.source_id == r.target_id) v.push_back("graph: self relationship on " + r.source_id);
  }
  if (s.backend_id.empty()) v.push_back("backend_id is empty");
  return v;
}

json to_json(const GenerationContext& ctx) {
  json history = json::array();
  const std::size_t from = ctx.history.size() > 2 ? ctx.history.size() - 2 : 0;
  for (std::size_t i = from; i < ctx.history.size(); ++i) history.push_back(to_json(ctx.history[i]));
  return {{"spec", to_json(ctx.spec)},
          {"demands",
           {{"density", ctx.demands.device_density},
            {"latency_ms", ctx.demands.mean_latency_ms},
            {"accuracy", ctx.demands.accuracy}}},
          {"kpis", to_json(ctx.kpis)},
          {"priority", to_string(ctx.priority)},
          {"weights", to_json(ctx.weights)},
          {"constraints",
           {{"sum", 1.0},
            {"w_min", ctx.spec.optimizer.w_min},
            {"dominance", "each prioritized weight strictly above every other weight"}}},
          {"sim_config", to_json(ctx.sim_config)},
          {"realtime", to_json(ctx.realtime)},
          {"history_tail", history}};
}

GeneratedScenario RuleBackend::propose(const GenerationContext& ctx) {
  GeneratedScenario s;
  s.predicted_graph = predict_next_state(ctx.history, ctx.realtime, ctx.spec.strategy, ctx.spec.twinning_rate,
                                         mix_seed(ctx.spec.seed, 1));
  s.sim_config = ctx.sim_config;
  s.weights = ctx.weights;
  s.priority = ctx.priority;
  s.provenance = ctx.spec.strategy;
  s.backend_id = id();
  return s;
}

GeneratedScenario MockBackend::propose(const GenerationContext&) {
  if (responses_.empty()) throw Error(ErrorCode::BackendFailure, "mock backend unavailable");
  const std::string& reply = responses_[calls_ % responses_.size()];
  ++calls_;
  try {
    GeneratedScenario s = parse_backend_reply(reply);
    s.backend_id = id();
    return s;
  } catch (const Error& e) {
    throw Error(ErrorCode::BackendFailure, std::string("mock reply rejected: ") + e.what());
  }
}

GeneratedScenario parse_backend_reply(const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::ParseError, "reply is not JSON");
  if (j.is_object() && j.contains("choices")) {
    try {
      const json& content = j.at("choices").at(0).at("message").at("content");
      if (content.is_object()) return scenario_from_json(content);
      json inner = json::parse(content.get<std::string>(), nullptr, false);
      if (inner.is_discarded()) throw Error(ErrorCode::ParseError, "message content is not JSON");
      return scenario_from_json(inner);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, std::string("chat reply: ") + e.what());
    }
  }
  return scenario_from_json(j);
}

RemoteSettings RemoteSettings::from_env(const BackendSettings& b) {
  RemoteSettings s;
  if (const char* url = std::getenv("TWINFORGE_LLM_URL")) s.url = url;
  if (const char* key = std::getenv("TWINFORGE_LLM_KEY")) s.key = key;
  s.model = b.model;
  s.timeout_s = b.timeout_s;
  s.retries = b.retries;
  return s;
}

std::unique_ptr<GeneratorBackend> make_backend(const BackendSettings& settings) {
  switch (settings.kind) {
    case BackendKind::Rule: return std::make_unique<RuleBackend>();
    case BackendKind::Mock: return std::make_unique<MockBackend>(settings.mock_responses);
    case BackendKind::Remote: return std::make_unique<RemoteBackend>(RemoteSettings::from_env(settings));
  }
  return std::make_unique<RuleBackend>();
}

RawMeasurements scenario_demands(const ScenarioSpec& spec, const SimConfig& topology) {
  RawMeasurements r;
  const double topo_density = static_cast<double>(topology.n_sensors) / topology.area_units;
  r.device_density = spec.targets.density.value_or(spec.kind == ScenarioKind::Synchronization ? 0.0 : topo_density);
  r.mean_latency_ms = spec.targets.latency_ms.value_or(spec.optimizer.l_max);
  r.latency_budget_ms = spec.optimizer.l_max;
  r.accuracy = spec.targets.accuracy.value_or(0.0);
  return r;
}

GenerationContext prepare_context(const HistoryStore& history, const TwinGraph& realtime, const ScenarioSpec& spec) {
  auto v = spec_violations(spec);
  if (!v.empty()) throw Error(ErrorCode::ConfigError, v.front());

  GenerationContext ctx;
  ctx.spec = spec;
  ctx.realtime = realtime;
  ctx.history = history.empty() ? std::vector<TwinGraph>{realtime} : history.window(history.size());
  ctx.sim_config = build_topology(spec.size_class, spec.sim, spec.seed);
  ctx.demands = scenario_demands(spec, ctx.sim_config);
  ctx.priority = spec.kind == ScenarioKind::Base ? PriorityPair::None : select_priority(ctx.demands, spec.thresholds);
  ctx.kpis = kpis_from_graph(realtime, spec.optimizer.l_max).value_or(KpiVector{0.5, 0.5, 0.5, 0.5});
  const WeightMode mode = spec.kind == ScenarioKind::Base ? WeightMode::Random : spec.weight_mode;
  ctx.weights = assign_weights(ctx.priority, mode, ctx.kpis, spec.seed, spec.optimizer);
  ctx.sim_config.weights = ctx.weights;
  return ctx;
}

GeneratedScenario generate(const HistoryStore& history, const TwinGraph& realtime, const ScenarioSpec& spec,
                           GeneratorBackend& backend) {
  const GenerationContext ctx = prepare_context(history, realtime, spec);
  auto problems = [&](const GeneratedScenario& c) {
    auto v = validate_scenario(c, spec.optimizer.w_min);
    if (c.priority != ctx.priority) v.push_back("priority: candidate disagrees with the selected case");
    if (c.provenance != spec.strategy) v.push_back("provenance: candidate claims another strategy");
    return v;
  };

  try {
    GeneratedScenario candidate = backend.propose(ctx);
    candidate.backend_id = backend.id();
    if (problems(candidate).empty()) return candidate;
  } catch (const std::exception&) {
    // fall through to the rule backend
  }

  RuleBackend rule;
  GeneratedScenario fallback = rule.propose(ctx);
  fallback.backend_id = "rule(fallback)";
  auto v = problems(fallback);
  if (!v.empty()) throw Error(ErrorCode::ValidationFailed, v.front());
  return fallback;
}

}  // namespace twinforge
