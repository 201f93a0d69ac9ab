#include "twinforge/twin_graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "twinforge/error.hpp"

namespace twinforge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::UnknownEndpoint: return "UnknownEndpoint";
    case ErrorCode::NameNotPermitted: return "NameNotPermitted";
    case ErrorCode::DuplicateRelationship: return "DuplicateRelationship";
    case ErrorCode::UnknownTwin: return "UnknownTwin";
    case ErrorCode::UnknownChannel: return "UnknownChannel";
    case ErrorCode::UnknownModel: return "UnknownModel";
    case ErrorCode::NonMonotoneTimestamp: return "NonMonotoneTimestamp";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::EmptyDenominator: return "EmptyDenominator";
    case ErrorCode::InvalidShare: return "InvalidShare";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::InfeasibleFloors: return "InfeasibleFloors";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::EmptySeries: return "EmptySeries";
    case ErrorCode::ZeroMean: return "ZeroMean";
    case ErrorCode::EmptyHistory: return "EmptyHistory";
    case ErrorCode::ValidationFailed: return "ValidationFailed";
    case ErrorCode::BackendFailure: return "BackendFailure";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

ValueKind kind_of(const Value& v) {
  switch (v.index()) {
    case 0: return ValueKind::Number;
    case 1: return ValueKind::Text;
    default: return ValueKind::Boolean;
  }
}

bool is_number(const Value& v) { return std::holds_alternative<double>(v); }

const PropertySchema* TwinModel::find_property(const std::string& name) const {
  auto it = std::find_if(properties.begin(), properties.end(), [&](const auto& p) { return p.name == name; });
  return it == properties.end() ? nullptr : &*it;
}

bool TwinModel::declares_channel(const std::string& channel) const {
  return std::find(telemetry.begin(), telemetry.end(), channel) != telemetry.end();
}

bool TwinModel::permits_relationship(const std::string& name) const {
  return std::find(relationships.begin(), relationships.end(), name) != relationships.end();
}

bool ModelRegistry::reaches(const std::string& from, const std::string& target) const {
  if (from == target) return true;
  const TwinModel* m = find(from);
  if (!m) return false;
  return std::any_of(m->components.begin(), m->components.end(),
                     [&](const ComponentDef& c) { return reaches(c.model_id, target); });
}

void ModelRegistry::add(TwinModel model) {
  if (model.model_id.empty()) throw Error(ErrorCode::SchemaViolation, "model id must be non-empty");
  if (contains(model.model_id)) throw Error(ErrorCode::DuplicateId, "model " + model.model_id);

  std::set<std::string> names;
  for (const auto& p : model.properties) {
    if (p.name.empty()) throw Error(ErrorCode::SchemaViolation, model.model_id + ": empty property name");
    if (!names.insert(p.name).second)
      throw Error(ErrorCode::SchemaViolation, model.model_id + ": duplicate property " + p.name);
  }
  std::set<std::string> comp_names;
  for (const auto& c : model.components) {
    if (!comp_names.insert(c.name).second)
      throw Error(ErrorCode::SchemaViolation, model.model_id + ": duplicate component " + c.name);
    // Components must reference already-registered models, so a cycle can only
    // close through this model itself.
    if (!contains(c.model_id) && c.model_id != model.model_id)
      throw Error(ErrorCode::UnknownModel, model.model_id + ": component model " + c.model_id);
    if (reaches(c.model_id, model.model_id))
      throw Error(ErrorCode::SchemaViolation, model.model_id + ": cyclic component nesting via " + c.model_id);
  }
  models_.emplace(model.model_id, std::move(model));
}

const TwinModel* ModelRegistry::find(const std::string& model_id) const {
  auto it = models_.find(model_id);
  return it == models_.end() ? nullptr : &it->second;
}

const TwinModel& ModelRegistry::at(const std::string& model_id) const {
  const TwinModel* m = find(model_id);
  if (!m) throw Error(ErrorCode::UnknownModel, model_id);
  return *m;
}

const PropertyValue* DigitalTwin::property(const std::string& name) const {
  auto it = properties.find(name);
  return it == properties.end() ? nullptr : &it->second;
}

const DigitalTwin* TwinGraph::find(const std::string& twin_id) const {
  auto it = twins.find(twin_id);
  return it == twins.end() ? nullptr : &it->second;
}

void check_conformance(const DigitalTwin& twin, const ModelRegistry& registry) {
  const TwinModel* model = registry.find(twin.model_id);
  if (!model) throw Error(ErrorCode::SchemaViolation, twin.twin_id + ": unknown model " + twin.model_id);

  for (const auto& [name, pv] : twin.properties) {
    const PropertySchema* schema = model->find_property(name);
    if (!schema) throw Error(ErrorCode::SchemaViolation, twin.twin_id + ": undeclared property " + name);
    if (schema->kind != pv.kind)
      throw Error(ErrorCode::SchemaViolation, twin.twin_id + ": static/dynamic mismatch on " + name);
    if (schema->value_kind != kind_of(pv.value))
      throw Error(ErrorCode::SchemaViolation, twin.twin_id + ": value kind mismatch on " + name);
  }

  std::set<std::string> seen;
  for (const auto& comp : twin.components) {
    auto def = std::find_if(model->components.begin(), model->components.end(),
                            [&](const ComponentDef& c) { return c.name == comp.twin_id; });
    if (def == model->components.end())
      throw Error(ErrorCode::SchemaViolation, twin.twin_id + ": undeclared component " + comp.twin_id);
    if (def->model_id != comp.model_id)
      throw Error(ErrorCode::SchemaViolation, twin.twin_id + ": component " + comp.twin_id + " has wrong model");
    if (!seen.insert(comp.twin_id).second)
      throw Error(ErrorCode::SchemaViolation, twin.twin_id + ": duplicate component " + comp.twin_id);
    check_conformance(comp, registry);
  }
}

TwinGraph add_twin(TwinGraph graph, DigitalTwin twin, const ModelRegistry& registry) {
  if (twin.twin_id.empty()) throw Error(ErrorCode::SchemaViolation, "twin id must be non-empty");
  if (graph.twins.count(twin.twin_id)) throw Error(ErrorCode::DuplicateId, twin.twin_id);
  check_conformance(twin, registry);
  std::string id = twin.twin_id;
  graph.twins.emplace(std::move(id), std::move(twin));
  return graph;
}

TwinGraph add_relationship(TwinGraph graph, Relationship rel, const ModelRegistry& registry) {
  const DigitalTwin* source = graph.find(rel.source_id);
  if (!source) throw Error(ErrorCode::UnknownEndpoint, rel.source_id);
  if (!graph.find(rel.target_id)) throw Error(ErrorCode::UnknownEndpoint, rel.target_id);
  if (rel.source_id == rel.target_id) throw Error(ErrorCode::UnknownEndpoint, "self relationship on " + rel.source_id);
  if (!registry.at(source->model_id).permits_relationship(rel.name))
    throw Error(ErrorCode::NameNotPermitted, rel.name + " from " + source->model_id);
  if (std::find(graph.relationships.begin(), graph.relationships.end(), rel) != graph.relationships.end())
    throw Error(ErrorCode::DuplicateRelationship, rel.source_id + " " + rel.name + " " + rel.target_id);
  graph.relationships.push_back(std::move(rel));
  return graph;
}

TwinGraph update_property(TwinGraph graph, const PropertyUpdate& update) {
  auto it = graph.twins.find(update.twin_id);
  if (it == graph.twins.end()) throw Error(ErrorCode::UnknownTwin, update.twin_id);
  auto pit = it->second.properties.find(update.property);
  if (pit == it->second.properties.end())
    throw Error(ErrorCode::SchemaViolation, update.twin_id + ": no property " + update.property);
  PropertyValue& pv = pit->second;
  if (pv.kind == PropertyKind::Static)
    throw Error(ErrorCode::SchemaViolation, update.twin_id + ": static property " + update.property);
  if (kind_of(pv.value) != kind_of(update.value))
    throw Error(ErrorCode::SchemaViolation, update.twin_id + ": value kind mismatch on " + update.property);
  if (update.timestamp < pv.last_updated)
    throw Error(ErrorCode::NonMonotoneTimestamp, update.twin_id + "." + update.property);
  pv.value = update.value;
  pv.last_updated = update.timestamp;
  return graph;
}

TelemetryResult emit_telemetry(TwinGraph graph, const TelemetryEvent& event, const TelemetryRoutes& routes,
                               const ModelRegistry& registry) {
  const DigitalTwin* twin = graph.find(event.twin_id);
  if (!twin) throw Error(ErrorCode::UnknownTwin, event.twin_id);
  if (!registry.at(twin->model_id).declares_channel(event.channel))
    throw Error(ErrorCode::UnknownChannel, event.channel + " on " + twin->model_id);

  TelemetryResult result;
  auto route = routes.find(event.channel);
  if (route == routes.end() || !route->second) {
    result.graph = std::move(graph);
    return result;
  }

  std::vector<PropertyUpdate> actions = route->second(*twin, event);
  for (const auto& action : actions) {
    const DigitalTwin* target = graph.find(action.twin_id);
    if (!target) continue;
    const PropertyValue* pv = target->property(action.property);
    // Only existing dynamic properties of the right kind are writable.
    if (!pv || pv->kind != PropertyKind::Dynamic || kind_of(pv->value) != kind_of(action.value) ||
        action.timestamp < pv->last_updated)
      continue;
    graph = update_property(std::move(graph), action);
    result.applied.push_back(action);
  }
  result.graph = std::move(graph);
  return result;
}

TelemetryHandler set_property_handler() {
  return [](const DigitalTwin& twin, const TelemetryEvent& event) {
    std::vector<PropertyUpdate> out;
    for (const auto& [name, value] : event.payload) out.push_back({twin.twin_id, name, value, event.timestamp});
    return out;
  };
}

namespace {

void collect_dynamic(const DigitalTwin& twin, const std::string& prefix,
                     std::map<std::string, const PropertyValue*>& out) {
  for (const auto& [name, pv] : twin.properties)
    if (pv.kind == PropertyKind::Dynamic) out.emplace(prefix + "/" + name, &pv);
  for (const auto& comp : twin.components) collect_dynamic(comp, prefix + "/" + comp.twin_id, out);
}

bool values_match(const Value& a, const Value& b, double tolerance) {
  if (is_number(a) && is_number(b)) {
    double x = std::get<double>(a);
    double y = std::get<double>(b);
    return std::abs(x - y) <= tolerance * std::max(1.0, std::abs(y));
  }
  return a == b;
}

}  // namespace

std::map<std::string, const PropertyValue*> dynamic_properties(const TwinGraph& graph) {
  std::map<std::string, const PropertyValue*> out;
  for (const auto& [id, twin] : graph.twins) collect_dynamic(twin, id, out);
  return out;
}

double twin_accuracy(const TwinGraph& twin, const TwinGraph& reference, double tolerance) {
  if (tolerance < 0) throw Error(ErrorCode::OutOfRange, "tolerance must be >= 0");
  auto lhs = dynamic_properties(twin);
  auto rhs = dynamic_properties(reference);

  std::size_t total = 0;
  std::size_t matching = 0;
  for (const auto& [key, pv] : lhs) {
    ++total;
    auto it = rhs.find(key);
    if (it != rhs.end() && values_match(pv->value, it->second->value, tolerance)) ++matching;
  }
  for (const auto& [key, pv] : rhs)
    if (!lhs.count(key)) ++total;
  // Two graphs without dynamic properties have nothing to disagree on.
  return total == 0 ? 1.0 : static_cast<double>(matching) / static_cast<double>(total);
}

}  // namespace twinforge
