#pragma once

// JSON forms of models and graphs (a DTDL-inspired subset) and the
// append-only `history.jsonl` file, one TwinGraph per line.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "twinforge/history_store.hpp"
#include "twinforge/twin_graph.hpp"

namespace twinforge {

using json = nlohmann::json;

json to_json(const Value& v);
Value value_from_json(const json& j);

json to_json(const TwinModel& model);
TwinModel model_from_json(const json& j);

json to_json(const DigitalTwin& twin);
DigitalTwin twin_from_json(const json& j);

json to_json(const TwinGraph& graph);
TwinGraph graph_from_json(const json& j);

/// Loads a model file holding either one model object or an array of them.
ModelRegistry load_models(const std::filesystem::path& path);

void append_history_line(const std::filesystem::path& path, const TwinGraph& graph);
HistoryStore load_history(const std::filesystem::path& path, std::size_t capacity = HistoryStore::kDefaultCapacity);

}  // namespace twinforge
