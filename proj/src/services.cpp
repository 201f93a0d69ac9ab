#include "twinforge/services.hpp"

#include <sstream>

#include "twinforge/error.hpp"
#include "twinforge/format.hpp"

namespace twinforge {

using nlohmann::json;

json to_json(const ServiceReport& r) {
  json table = json::array();
  for (const auto& row : r.csv_rows) table.push_back(row);
  return {{"service", r.service}, {"seed", r.seed},     {"config", r.config},
          {"metrics", r.metrics}, {"flags", r.flags},   {"table", {{"header", r.csv_header}, {"rows", table}}}};
}

std::string to_markdown(const ServiceReport& r) {
  std::ostringstream os;
  os << "## " << r.service << "\n\n";
  os << "- seed: " << r.seed << "\n";
  for (const auto& f : r.flags) os << "- flag: " << f << "\n";
  for (const auto& [key, val] : r.metrics.items()) {
    if (val.is_number_float()) os << "- " << key << ": " << num(val.get<double>(), 4) << "\n";
    else if (val.is_primitive()) os << "- " << key << ": " << val.dump() << "\n";
  }
  if (!r.csv_header.empty()) {
    os << "\n|";
    for (const auto& h : r.csv_header) os << ' ' << h << " |";
    os << "\n|";
    for (std::size_t i = 0; i < r.csv_header.size(); ++i) os << " --- |";
    os << "\n";
    for (const auto& row : r.csv_rows) {
      os << "|";
      for (const auto& c : row) os << ' ' << c << " |";
      os << "\n";
    }
  }
  os << "\n";
  return os.str();
}

std::string to_csv(const ServiceReport& r) {
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << "\n";
  };
  line(r.csv_header);
  for (const auto& row : r.csv_rows) line(row);
  return os.str();
}

namespace {

std::vector<std::string> required_dynamic(ServiceId service, const std::string& model) {
  switch (service) {
    case ServiceId::Ptr:
      if (model == "waste_bin") return {"fill_level", "fill_rate"};
      break;
    case ServiceId::Mmtc:
    case ServiceId::Tic:
      if (model == "sensor") return {"load"};
      break;
    case ServiceId::Sync: break;
  }
  return {};
}

bool wanted(ServiceId service, const std::string& model) {
  switch (service) {
    case ServiceId::Ptr: return model == "waste_bin";
    case ServiceId::Mmtc:
    case ServiceId::Tic: return model == "sensor" || model == "gateway";
    case ServiceId::Sync: return true;
  }
  return true;
}

}  // namespace

ServiceDataset capture_data(const HistoryStore& history, const TwinGraph& realtime, ServiceId service) {
  ServiceDataset d;
  d.service = service;
  if (service == ServiceId::Sync) {
    if (history.empty()) throw Error(ErrorCode::InsufficientHistory, "sync capture needs at least one snapshot");
    d.history = history.window(history.size());
  }
  d.graph.timestamp = realtime.timestamp;
  for (const auto& [id, twin] : realtime.twins) {
    if (!wanted(service, twin.model_id)) continue;
    bool complete = true;
    for (const auto& name : required_dynamic(service, twin.model_id)) {
      const PropertyValue* p = twin.property(name);
      complete = complete && p && p->kind == PropertyKind::Dynamic && is_number(p->value);
    }
    if (!complete) {
      ++d.dropped;
      continue;
    }
    d.graph.twins.emplace(id, twin);
  }
  for (const auto& r : realtime.relationships)
    if (d.graph.find(r.source_id) && d.graph.find(r.target_id)) d.graph.relationships.push_back(r);
  return d;
}

}  // namespace twinforge
