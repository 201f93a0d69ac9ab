#pragma once

// Digital twin data model: models (property / telemetry / component /
// relationship tuples), twin instances, the live graph G_t and telemetry routing.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace twinforge {

using Timestamp = std::int64_t;  // milliseconds

enum class PropertyKind { Static, Dynamic };
enum class ValueKind { Number, Text, Boolean };

using Value = std::variant<double, std::string, bool>;

ValueKind kind_of(const Value& v);
bool is_number(const Value& v);

struct PropertySchema {
  std::string name;
  PropertyKind kind = PropertyKind::Dynamic;
  ValueKind value_kind = ValueKind::Number;
  std::optional<std::string> unit;

  bool operator==(const PropertySchema&) const = default;
};

/// A component slot inside a model: the embedded twin is an instance of
/// `model_id` and is addressed by `name` within its parent.
struct ComponentDef {
  std::string name;
  std::string model_id;

  bool operator==(const ComponentDef&) const = default;
};

struct TwinModel {
  std::string model_id;
  std::vector<PropertySchema> properties;
  std::vector<std::string> telemetry;
  std::vector<ComponentDef> components;
  std::vector<std::string> relationships;

  const PropertySchema* find_property(const std::string& name) const;
  bool declares_channel(const std::string& channel) const;
  bool permits_relationship(const std::string& name) const;

  bool operator==(const TwinModel&) const = default;
};

/// Registry of models keyed by id. Rejects duplicate ids, duplicate property
/// names and cyclic component nesting at insertion time.
class ModelRegistry {
 public:
  void add(TwinModel model);
  const TwinModel& at(const std::string& model_id) const;
  const TwinModel* find(const std::string& model_id) const;
  bool contains(const std::string& model_id) const { return models_.count(model_id) != 0; }
  const std::map<std::string, TwinModel>& models() const { return models_; }

 private:
  bool reaches(const std::string& from, const std::string& target) const;

  std::map<std::string, TwinModel> models_;
};

struct PropertyValue {
  Value value;
  PropertyKind kind = PropertyKind::Dynamic;
  Timestamp last_updated = 0;

  bool operator==(const PropertyValue&) const = default;
};

struct DigitalTwin {
  std::string twin_id;
  std::string model_id;
  std::map<std::string, PropertyValue> properties;
  std::vector<DigitalTwin> components;  // e.g. a battery sub-twin; twin_id is the component name

  const PropertyValue* property(const std::string& name) const;
  bool operator==(const DigitalTwin&) const = default;
};

struct Relationship {
  std::string source_id;
  std::string target_id;
  std::string name;

  bool operator==(const Relationship&) const = default;
};

struct TwinGraph {
  Timestamp timestamp = 0;
  std::map<std::string, DigitalTwin> twins;
  std::vector<Relationship> relationships;

  const DigitalTwin* find(const std::string& twin_id) const;
  bool operator==(const TwinGraph&) const = default;
};

struct TelemetryEvent {
  std::string twin_id;
  std::string channel;
  std::map<std::string, Value> payload;
  Timestamp timestamp = 0;
};

/// A property update requested by a telemetry handler.
struct PropertyUpdate {
  std::string twin_id;
  std::string property;
  Value value;
  Timestamp timestamp = 0;

  bool operator==(const PropertyUpdate&) const = default;
};

using TelemetryHandler = std::function<std::vector<PropertyUpdate>(const DigitalTwin&, const TelemetryEvent&)>;
using TelemetryRoutes = std::map<std::string, TelemetryHandler>;

struct TelemetryResult {
  TwinGraph graph;
  std::vector<PropertyUpdate> applied;
};

// Throws SchemaViolation when the twin (or any component) does not match its model.
void check_conformance(const DigitalTwin& twin, const ModelRegistry& registry);

TwinGraph add_twin(TwinGraph graph, DigitalTwin twin, const ModelRegistry& registry);
TwinGraph add_relationship(TwinGraph graph, Relationship rel, const ModelRegistry& registry);

/// Applies a dynamic-property update. Static properties are immutable and an
/// update older than the stored last_updated is rejected.
TwinGraph update_property(TwinGraph graph, const PropertyUpdate& update);

/// Delivers the event to the handler registered for its channel (no handler:
/// no-op) and applies the returned updates that target dynamic properties.
TelemetryResult emit_telemetry(TwinGraph graph, const TelemetryEvent& event, const TelemetryRoutes& routes,
                               const ModelRegistry& registry);

/// Handler that turns every payload entry into an update of the same-named
/// property on the event's twin.
TelemetryHandler set_property_handler();

/// Fraction of matching dynamic properties over the union of both graphs.
/// Numbers match when |a-b| <= tolerance * max(1, |b|); other values on equality.
double twin_accuracy(const TwinGraph& twin, const TwinGraph& reference, double tolerance = 0.02);

/// Flattened view of a twin's dynamic properties, keyed "twin/component/.../name".
std::map<std::string, const PropertyValue*> dynamic_properties(const TwinGraph& graph);

}  // namespace twinforge
