#include <cmath>
#include <map>
#include <set>

#include "twinforge/error.hpp"
#include "twinforge/rng.hpp"
#include "twinforge/scenario.hpp"

namespace twinforge {

namespace {

using MeanTable = std::map<std::pair<std::string, std::string>, std::pair<double, std::size_t>>;

const DigitalTwin* find_component(const DigitalTwin* parent, const std::string& id) {
  if (!parent) return nullptr;
  for (const auto& c : parent->components)
    if (c.twin_id == id) return &c;
  return nullptr;
}

// Linear trend over (prev, last) for every dynamic numeric property.
void extrapolate(DigitalTwin& twin, const DigitalTwin* prev, Timestamp ts) {
  for (auto& [name, pv] : twin.properties) {
    if (pv.kind != PropertyKind::Dynamic || !is_number(pv.value)) continue;
    const double last = std::get<double>(pv.value);
    double next = last;
    if (prev) {
      const PropertyValue* old = prev->property(name);
      if (old && is_number(old->value)) next = 2 * last - std::get<double>(old->value);
    }
    pv.value = next;
    pv.last_updated = std::max(pv.last_updated, ts);
  }
  for (auto& c : twin.components) extrapolate(c, find_component(prev, c.twin_id), ts);
}

void accumulate(const DigitalTwin& twin, MeanTable& table) {
  for (const auto& [name, pv] : twin.properties) {
    if (pv.kind != PropertyKind::Dynamic || !is_number(pv.value)) continue;
    auto& cell = table[{twin.model_id, name}];
    cell.first += std::get<double>(pv.value);
    ++cell.second;
  }
  for (const auto& c : twin.components) accumulate(c, table);
}

void damp_toward_mean(DigitalTwin& twin, const MeanTable& table) {
  for (auto& [name, pv] : twin.properties) {
    if (pv.kind != PropertyKind::Dynamic || !is_number(pv.value)) continue;
    auto it = table.find({twin.model_id, name});
    if (it == table.end() || it->second.second == 0) continue;
    const double mean = it->second.first / static_cast<double>(it->second.second);
    const double trend = std::get<double>(pv.value);
    pv.value = trend + kGaiDamping * (mean - trend);
  }
  for (auto& c : twin.components) damp_toward_mean(c, table);
}

}  // namespace

TwinGraph predict_next_state(const std::vector<TwinGraph>& history, const TwinGraph& realtime, Strategy strategy,
                             double synced_fraction, std::uint64_t seed, PredictionStats* stats) {
  if (history.empty()) throw Error(ErrorCode::EmptyHistory, "prediction needs at least one snapshot");
  if (strategy != Strategy::H && !(synced_fraction > 0 && synced_fraction <= 1))
    throw Error(ErrorCode::OutOfRange, "synced_fraction outside (0,1]");

  const TwinGraph& last = history.back();
  const TwinGraph* prev = history.size() >= 2 ? &history[history.size() - 2] : nullptr;
  const Timestamp ts = std::max(realtime.timestamp, last.timestamp);

  TwinGraph out;
  out.timestamp = ts;
  for (const auto& [id, twin] : last.twins) {
    DigitalTwin t = twin;
    extrapolate(t, prev ? prev->find(id) : nullptr, ts);
    out.twins.emplace(id, std::move(t));
  }
  out.relationships = last.relationships;

  PredictionStats local;
  if (strategy != Strategy::H) {
    std::vector<std::string> ids;
    ids.reserve(realtime.twins.size());
    for (const auto& [id, twin] : realtime.twins) ids.push_back(id);
    const auto k = static_cast<std::size_t>(std::ceil(synced_fraction * static_cast<double>(ids.size()) - 1e-9));
    Rng rng(seed);
    std::set<std::string> synced;
    for (std::size_t i : rng.sample(ids.size(), k)) synced.insert(ids[i]);

    MeanTable means;
    for (const auto& id : synced) {
      const DigitalTwin& rt = realtime.twins.at(id);
      out.twins[id] = rt;
      accumulate(rt, means);
    }
    if (strategy == Strategy::HRGAI) {
      for (auto& [id, twin] : out.twins)
        if (!synced.count(id)) damp_toward_mean(twin, means);
    }
    out.relationships.clear();
    for (const auto& r : realtime.relationships)
      if (out.twins.count(r.source_id) && out.twins.count(r.target_id)) out.relationships.push_back(r);
    local.realtime_reads = synced.size();
    local.synced.assign(synced.begin(), synced.end());
  }
  if (stats) *stats = std::move(local);
  return out;
}

}  // namespace twinforge
