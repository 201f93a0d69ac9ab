#include <cmath>
#include <limits>
#include <unordered_map>

#include "twinforge/error.hpp"
#include "twinforge/format.hpp"
#include "twinforge/network_twin.hpp"
#include "twinforge/services.hpp"

namespace twinforge {

namespace {

double hop(double x1, double y1, double x2, double y2) { return std::hypot(x1 - x2, y1 - y2); }

double number_of(const DigitalTwin& t, const char* name) {
  const PropertyValue* p = t.property(name);
  if (!p || !is_number(p->value)) throw Error(ErrorCode::SchemaViolation, t.twin_id + " lacks numeric " + name);
  return std::get<double>(p->value);
}

}  // namespace

PtrInstance random_ptr_instance(std::size_t n_bins, std::uint64_t seed, double extent_km) {
  Rng rng(seed);
  PtrInstance in;
  in.depot_x = in.depot_y = extent_km / 2;
  in.coef_fill = 1.0;
  in.coef_rate = 0.5;
  for (std::size_t i = 0; i < n_bins; ++i) {
    Bin b;
    b.id = "bin-" + std::to_string(i);
    b.x = rng.uniform(0, extent_km);
    b.y = rng.uniform(0, extent_km);
    b.fill_level = rng.uniform();
    b.fill_rate = rng.uniform(0, 0.5);
    in.bins.push_back(b);
  }
  return in;
}

TwinGraph ptr_graph(const PtrInstance& instance) {
  const ModelRegistry registry = standard_models();
  TwinGraph g;
  for (const Bin& b : instance.bins) {
    DigitalTwin t{b.id, "waste_bin", {}, {}};
    t.properties["x"] = {Value{b.x}, PropertyKind::Static, 0};
    t.properties["y"] = {Value{b.y}, PropertyKind::Static, 0};
    t.properties["fill_level"] = {Value{b.fill_level}, PropertyKind::Dynamic, 0};
    t.properties["fill_rate"] = {Value{b.fill_rate}, PropertyKind::Dynamic, 0};
    g = add_twin(std::move(g), std::move(t), registry);
  }
  return g;
}

PtrInstance ptr_instance_from(const ServiceDataset& data, const nlohmann::json& options) {
  PtrInstance in;
  try {
    in.depot_x = options.value("depot_x", 0.0);
    in.depot_y = options.value("depot_y", 0.0);
    in.truck_capacity = options.value("truck_capacity", std::size_t{0});
    in.coef_fill = options.value("coef_fill", 1.0);
    in.coef_rate = options.value("coef_rate", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("ptr options: ") + e.what());
  }
  for (const auto& [id, t] : data.graph.twins) {
    if (t.model_id != "waste_bin") continue;
    in.bins.push_back({id, number_of(t, "x"), number_of(t, "y"), number_of(t, "fill_level"), number_of(t, "fill_rate")});
  }
  return in;
}

PtrRoute plan_route(const PtrInstance& in, double threshold) {
  if (!(threshold > 0 && threshold < 1)) throw Error(ErrorCode::OutOfRange, "threshold outside (0,1)");
  if (!std::isfinite(in.depot_x) || !std::isfinite(in.depot_y)) throw Error(ErrorCode::InvalidConfig, "depot not finite");
  for (const Bin& b : in.bins)
    if (!(b.fill_level >= 0 && b.fill_level <= 1) || !std::isfinite(b.x) || !std::isfinite(b.y))
      throw Error(ErrorCode::InvalidConfig, "bin " + b.id + " out of range");

  PtrRoute route;
  std::vector<const Bin*> todo;
  for (const Bin& b : in.bins) {
    if (in.coef_fill * b.fill_level + in.coef_rate * b.fill_rate >= threshold) {
      todo.push_back(&b);
      route.selected.push_back(b.id);
    } else if (b.fill_level + b.fill_rate > 1.0) {
      ++route.missed;
    }
  }
  route.missed_rate = in.bins.empty() ? 0.0 : static_cast<double>(route.missed) / static_cast<double>(in.bins.size());

  double x = in.depot_x, y = in.depot_y;
  std::size_t in_trip = 0;
  while (!todo.empty()) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < todo.size(); ++i) {
      const double d = hop(x, y, todo[i]->x, todo[i]->y);
      if (d < best_d) best_d = d, best = i;
    }
    const Bin* b = todo[best];
    todo.erase(todo.begin() + static_cast<std::ptrdiff_t>(best));
    route.length += best_d;
    route.order.push_back(b->id);
    x = b->x;
    y = b->y;
    if (++in_trip == in.truck_capacity && !todo.empty()) {
      route.length += hop(x, y, in.depot_x, in.depot_y);
      x = in.depot_x;
      y = in.depot_y;
      route.trip_sizes.push_back(in_trip);
      in_trip = 0;
    }
  }
  if (in_trip > 0) {
    route.length += hop(x, y, in.depot_x, in.depot_y);
    route.trip_sizes.push_back(in_trip);
  }
  return route;
}

ServiceReport run_ptr(const PtrInstance& in, double threshold) {
  const PtrRoute route = plan_route(in, threshold);
  ServiceReport r;
  r.service = "ptr";
  r.config = {{"threshold", threshold},
              {"bins", in.bins.size()},
              {"depot", {in.depot_x, in.depot_y}},
              {"truck_capacity", in.truck_capacity},
              {"coef_fill", in.coef_fill},
              {"coef_rate", in.coef_rate}};
  r.metrics = {{"selected", route.selected.size()},
               {"route", route.order},
               {"trips", route.trip_sizes.size()},
               {"route_length_km", route.length},
               {"missed_bins", route.missed},
               {"missed_rate", route.missed_rate}};
  std::unordered_map<std::string, const Bin*> by_id;
  for (const Bin& b : in.bins) by_id[b.id] = &b;
  r.csv_header = {"stop", "bin_id", "x_km", "y_km"};
  for (std::size_t i = 0; i < route.order.size(); ++i) {
    const Bin* b = by_id.at(route.order[i]);
    r.csv_rows.push_back({std::to_string(i + 1), b->id, num(b->x, 4), num(b->y, 4)});
  }
  return r;
}

}  // namespace twinforge
