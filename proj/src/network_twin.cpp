#include "twinforge/network_twin.hpp"

#include <algorithm>

namespace twinforge {

namespace {

PropertySchema prop(std::string name, PropertyKind kind, ValueKind vk = ValueKind::Number,
                    std::optional<std::string> unit = std::nullopt) {
  return {std::move(name), kind, vk, std::move(unit)};
}

PropertyValue num(double v, Timestamp t, PropertyKind k = PropertyKind::Dynamic) { return {Value{v}, k, t}; }

std::string sensor_id(std::size_t i) { return "sensor-" + std::to_string(i); }
std::string gateway_id(std::size_t g) { return "gw-" + std::to_string(g); }

}  // namespace

ModelRegistry standard_models() {
  using K = PropertyKind;
  ModelRegistry r;

  TwinModel battery;
  battery.model_id = "battery";
  battery.properties = {prop("level", K::Dynamic, ValueKind::Number, "fraction"),
                        prop("capacity_mah", K::Static, ValueKind::Number, "mAh")};
  r.add(battery);

  TwinModel sensor;
  sensor.model_id = "sensor";
  sensor.properties = {prop("gateway", K::Static, ValueKind::Text), prop("ul_active", K::Dynamic, ValueKind::Boolean),
                       prop("load", K::Dynamic, ValueKind::Number, "fraction"),
                       prop("tx_power", K::Dynamic, ValueKind::Number, "dBm")};
  sensor.telemetry = {"measurement", "set_param"};
  sensor.components = {{"battery", "battery"}};
  sensor.relationships = {"connected_to", "located_in"};
  r.add(sensor);

  TwinModel gateway;
  gateway.model_id = "gateway";
  gateway.properties = {prop("capacity", K::Static, ValueKind::Number, "packets/slot"),
                        prop("buffer_capacity", K::Static, ValueKind::Number, "packets"),
                        prop("coverage", K::Dynamic), prop("hit_rate", K::Dynamic),
                        prop("latency_ms", K::Dynamic, ValueKind::Number, "ms"), prop("occupancy", K::Dynamic)};
  gateway.telemetry = {"measurement", "set_param"};
  gateway.relationships = {"located_in"};
  r.add(gateway);

  TwinModel bin;
  bin.model_id = "waste_bin";
  bin.properties = {prop("x", K::Static, ValueKind::Number, "km"), prop("y", K::Static, ValueKind::Number, "km"),
                    prop("fill_level", K::Dynamic, ValueKind::Number, "fraction"),
                    prop("fill_rate", K::Dynamic, ValueKind::Number, "fraction/day")};
  bin.telemetry = {"measurement"};
  bin.relationships = {"located_in"};
  r.add(bin);
  return r;
}

TwinGraph build_network_graph(const SimConfig& config, const ModelRegistry& registry, Timestamp timestamp,
                              const SimMetrics* metrics) {
  TwinGraph g;
  g.timestamp = timestamp;
  for (std::size_t gw = 0; gw < config.n_gateways; ++gw) {
    DigitalTwin t{gateway_id(gw), "gateway", {}, {}};
    t.properties["capacity"] = num(config.gateway_capacity, timestamp, PropertyKind::Static);
    t.properties["buffer_capacity"] = num(config.buffer_capacity, timestamp, PropertyKind::Static);
    if (metrics) {
      auto k = normalize_kpis(extract_raw_measurements(*metrics, config, 0.0));
      t.properties["coverage"] = num(k.rho, timestamp);
      t.properties["hit_rate"] = num(k.d, timestamp);
      t.properties["latency_ms"] = num(metrics->mean_latency_slots() * config.slot_ms, timestamp);
      t.properties["occupancy"] = num(metrics->mean_buffer_occupancy, timestamp);
    }
    g = add_twin(std::move(g), std::move(t), registry);
  }
  for (std::size_t s = 0; s < config.n_sensors; ++s) {
    DigitalTwin t{sensor_id(s), "sensor", {}, {}};
    t.properties["gateway"] = {Value{gateway_id(config.gateway_of(s))}, PropertyKind::Static, timestamp};
    t.properties["load"] = num(0.0, timestamp);
    t.properties["tx_power"] = num(0.0, timestamp);
    DigitalTwin bat{"battery", "battery", {}, {}};
    bat.properties["level"] = num(1.0, timestamp);
    t.components.push_back(std::move(bat));
    g = add_twin(std::move(g), std::move(t), registry);
  }
  for (std::size_t s = 0; s < config.n_sensors; ++s)
    g = add_relationship(std::move(g), {sensor_id(s), gateway_id(config.gateway_of(s)), "connected_to"}, registry);
  return g;
}

std::optional<KpiVector> kpis_from_graph(const TwinGraph& graph, double l_max) {
  KpiVector sum;
  std::size_t n = 0;
  for (const auto& [id, t] : graph.twins) {
    if (t.model_id != "gateway") continue;
    auto get = [&](const char* name) -> std::optional<double> {
      const PropertyValue* p = t.property(name);
      if (!p || !is_number(p->value)) return std::nullopt;
      return std::get<double>(p->value);
    };
    auto cov = get("coverage"), hit = get("hit_rate"), lat = get("latency_ms"), occ = get("occupancy");
    if (!cov || !hit || !lat || !occ) continue;
    sum.rho += *cov;
    sum.d += *hit;
    sum.l += std::clamp(1.0 - *lat / l_max, 0.0, 1.0);
    sum.alpha += 1.0 - *occ;
    ++n;
  }
  if (n == 0) return std::nullopt;
  for (KpiId id : kAllKpis) sum[id] /= static_cast<double>(n);
  return sum;
}

}  // namespace twinforge
