#include "twinforge/twin_json.hpp"

#include <fstream>

#include "twinforge/error.hpp"

namespace twinforge {

namespace {

const char* kind_name(PropertyKind k) { return k == PropertyKind::Static ? "static" : "dynamic"; }

PropertyKind kind_from(const std::string& s) {
  if (s == "static") return PropertyKind::Static;
  if (s == "dynamic") return PropertyKind::Dynamic;
  throw Error(ErrorCode::ParseError, "property kind " + s);
}

const char* value_kind_name(ValueKind k) {
  switch (k) {
    case ValueKind::Number: return "number";
    case ValueKind::Text: return "text";
    case ValueKind::Boolean: return "boolean";
  }
  return "number";
}

ValueKind value_kind_from(const std::string& s) {
  if (s == "number" || s == "double" || s == "integer") return ValueKind::Number;
  if (s == "text" || s == "string") return ValueKind::Text;
  if (s == "boolean") return ValueKind::Boolean;
  throw Error(ErrorCode::ParseError, "value schema " + s);
}

template <typename F>
auto parse_guard(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string(what) + ": " + e.what());
  }
}

}  // namespace

json to_json(const Value& v) {
  return std::visit([](const auto& x) { return json(x); }, v);
}

Value value_from_json(const json& j) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw Error(ErrorCode::ParseError, "unsupported value " + j.dump());
}

json to_json(const TwinModel& model) {
  json props = json::array();
  for (const auto& p : model.properties) {
    json jp = {{"name", p.name}, {"kind", kind_name(p.kind)}, {"schema", value_kind_name(p.value_kind)}};
    if (p.unit) jp["unit"] = *p.unit;
    props.push_back(std::move(jp));
  }
  json comps = json::array();
  for (const auto& c : model.components) comps.push_back({{"name", c.name}, {"modelId", c.model_id}});
  return {{"modelId", model.model_id},
          {"properties", std::move(props)},
          {"telemetry", model.telemetry},
          {"components", std::move(comps)},
          {"relationships", model.relationships}};
}

TwinModel model_from_json(const json& j) {
  return parse_guard("model", [&] {
    TwinModel m;
    m.model_id = j.at("modelId").get<std::string>();
    for (const auto& jp : j.value("properties", json::array())) {
      PropertySchema p;
      p.name = jp.at("name").get<std::string>();
      p.kind = kind_from(jp.value("kind", "dynamic"));
      p.value_kind = value_kind_from(jp.value("schema", "number"));
      if (jp.contains("unit")) p.unit = jp.at("unit").get<std::string>();
      m.properties.push_back(std::move(p));
    }
    m.telemetry = j.value("telemetry", std::vector<std::string>{});
    for (const auto& jc : j.value("components", json::array()))
      m.components.push_back({jc.at("name").get<std::string>(), jc.at("modelId").get<std::string>()});
    m.relationships = j.value("relationships", std::vector<std::string>{});
    return m;
  });
}

json to_json(const DigitalTwin& twin) {
  json props = json::object();
  for (const auto& [name, pv] : twin.properties)
    props[name] = {{"value", to_json(pv.value)}, {"kind", kind_name(pv.kind)}, {"lastUpdated", pv.last_updated}};
  json comps = json::array();
  for (const auto& c : twin.components) comps.push_back(to_json(c));
  return {{"twinId", twin.twin_id}, {"modelId", twin.model_id}, {"properties", std::move(props)},
          {"components", std::move(comps)}};
}

DigitalTwin twin_from_json(const json& j) {
  return parse_guard("twin", [&] {
    DigitalTwin t;
    t.twin_id = j.at("twinId").get<std::string>();
    t.model_id = j.at("modelId").get<std::string>();
    const json props = j.value("properties", json::object());
    for (const auto& [name, jp] : props.items()) {
      PropertyValue pv;
      pv.value = value_from_json(jp.at("value"));
      pv.kind = kind_from(jp.value("kind", "dynamic"));
      pv.last_updated = jp.value("lastUpdated", Timestamp{0});
      t.properties.emplace(name, std::move(pv));
    }
    for (const auto& jc : j.value("components", json::array())) t.components.push_back(twin_from_json(jc));
    return t;
  });
}

json to_json(const TwinGraph& graph) {
  json twins = json::array();
  for (const auto& [id, twin] : graph.twins) twins.push_back(to_json(twin));
  json rels = json::array();
  for (const auto& r : graph.relationships)
    rels.push_back({{"source", r.source_id}, {"target", r.target_id}, {"name", r.name}});
  return {{"timestamp", graph.timestamp}, {"twins", std::move(twins)}, {"relationships", std::move(rels)}};
}

TwinGraph graph_from_json(const json& j) {
  return parse_guard("graph", [&] {
    TwinGraph g;
    g.timestamp = j.at("timestamp").get<Timestamp>();
    for (const auto& jt : j.value("twins", json::array())) {
      DigitalTwin t = twin_from_json(jt);
      if (g.twins.count(t.twin_id)) throw Error(ErrorCode::DuplicateId, t.twin_id);
      std::string id = t.twin_id;
      g.twins.emplace(std::move(id), std::move(t));
    }
    for (const auto& jr : j.value("relationships", json::array())) {
      Relationship r{jr.at("source").get<std::string>(), jr.at("target").get<std::string>(),
                     jr.at("name").get<std::string>()};
      if (!g.find(r.source_id) || !g.find(r.target_id))
        throw Error(ErrorCode::UnknownEndpoint, r.source_id + " -> " + r.target_id);
      g.relationships.push_back(std::move(r));
    }
    return g;
  });
}

ModelRegistry load_models(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open " + path.string());
  json j = parse_guard("model file", [&] { return json::parse(in); });
  ModelRegistry registry;
  if (j.is_array()) {
    for (const auto& jm : j) registry.add(model_from_json(jm));
  } else {
    registry.add(model_from_json(j));
  }
  return registry;
}

void append_history_line(const std::filesystem::path& path, const TwinGraph& graph) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot append to " + path.string());
  out << to_json(graph).dump() << '\n';
}

HistoryStore load_history(const std::filesystem::path& path, std::size_t capacity) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open " + path.string());
  HistoryStore store(capacity);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    store.append(graph_from_json(parse_guard("history line", [&] { return json::parse(line); })));
  }
  return store;
}

}  // namespace twinforge
