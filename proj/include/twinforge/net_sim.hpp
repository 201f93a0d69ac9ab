#pragma once

// Slotted simulator of stationary IoT sensors attached to gateways.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "twinforge/kpi.hpp"

namespace twinforge {

enum class SizeClass { Small, Medium, Large };

std::string_view to_string(SizeClass s);
SizeClass size_class_from_string(std::string_view s);

enum class Direction { UL, DL };

struct Packet {
  std::uint32_t src = 0;
  Direction direction = Direction::UL;
  std::uint32_t size = 1;  // bits
  std::int64_t created_at = 0;
  std::int64_t deadline = 0;  // last slot in which the packet may be served
  std::uint64_t seq = 0;      // arrival order, the final tie-break

  bool operator==(const Packet&) const = default;
};

struct SimConfig {
  std::size_t n_sensors = 50;
  std::size_t n_gateways = 2;
  double ul_fraction = 0.20;
  std::uint32_t payload_limit = 2000;  // bits per packet
  std::uint32_t gateway_capacity = 4;  // packets per gateway per slot
  std::uint32_t buffer_capacity = 16;  // packets per gateway
  std::uint32_t min_deadline = 2;      // slots; deadlines are drawn from [min_deadline, deadline]
  std::uint32_t deadline = 10;
  std::uint32_t duration = 200;  // slots
  std::uint64_t seed = 1;
  WeightVector weights;
  double rearrival_probability = 0.5;
  double dl_probability = 0.2;
  double slot_ms = 0.1;
  double area_units = 1.0;
  std::vector<std::size_t> assignment;  // sensor -> gateway; empty means round-robin

  std::size_t gateway_of(std::size_t sensor) const;
  bool operator==(const SimConfig&) const = default;
};

std::vector<std::string> config_violations(const SimConfig& c);
void validate_config(const SimConfig& c);  // throws InvalidConfig listing every violation

/// Preset small / medium / large topology with round-robin gateway assignment. `overrides` is a
/// `sim` object whose keys mirror SimConfig fields.
SimConfig build_topology(SizeClass size, const nlohmann::json& overrides = nlohmann::json::object(),
                         std::uint64_t seed = 1);
void apply_overrides(SimConfig& c, const nlohmann::json& overrides);

nlohmann::json to_json(const SimConfig& c);
SimConfig sim_config_from_json(const nlohmann::json& j);

struct SimMetrics {
  std::vector<std::uint32_t> throughput_series;  // delivered packets per slot
  std::vector<std::uint32_t> queue_series;       // queued packets after each slot
  std::uint64_t generated = 0, delivered = 0, dropped = 0;
  std::uint64_t deadline_hits = 0, deadline_total = 0;
  std::vector<std::uint32_t> latency_samples;  // slots from arrival to delivery
  double mean_buffer_occupancy = 0;
  std::size_t active_sensors = 0, served_sensors = 0;

  double mean_latency_slots() const;
  double loss_rate() const;
  bool operator==(const SimMetrics&) const = default;
};

struct GatewayView {
  std::size_t gateway;
  const std::vector<Packet>& queue;
  std::int64_t now;
  const SimConfig& config;
  const std::vector<bool>& sensor_served;
};

struct SlotFeedback {
  std::int64_t slot = 0;
  std::uint32_t delivered = 0;  // all deliveries meet their deadline
  std::uint32_t dropped = 0;    // overflow and expiry at this gateway in this slot
  bool terminal = false;        // leftovers flushed at end of run
};

/// Decides which queued packets a gateway serves in a slot.
class ServicePolicy {
 public:
  virtual ~ServicePolicy() = default;
  /// Indices into view.queue in service order; only the first gateway_capacity are used.
  virtual std::vector<std::size_t> select(const GatewayView& view) = 0;
  virtual void feedback(std::size_t /*gateway*/, const SlotFeedback& /*fb*/) {}
};

class WeightedPolicy : public ServicePolicy {
 public:
  std::vector<std::size_t> select(const GatewayView& view) override;
};

class FifoPolicy : public ServicePolicy {
 public:
  std::vector<std::size_t> select(const GatewayView& view) override;
};

struct ScheduleContext {
  const std::vector<bool>* sensor_served = nullptr;  // null: nobody served yet
  std::uint32_t payload_limit = 2000;
};

/// Service order by descending weighted score, ties by (created_at, src, seq).
std::vector<std::size_t> weighted_schedule(const std::vector<Packet>& queue, const WeightVector& w, std::int64_t now,
                                           const ScheduleContext& ctx = {});

SimMetrics run_sim(const SimConfig& config);
SimMetrics run_sim(const SimConfig& config, ServicePolicy& policy);

/// Coefficient of variation (population std / mean).
double stability(const std::vector<std::uint32_t>& series);
double stability(const std::vector<double>& series);

RawMeasurements extract_raw_measurements(const SimMetrics& m, const SimConfig& c, double accuracy,
                                         double latency_budget_ms = 9.0);

nlohmann::json summary_json(const SimMetrics& m);
std::string metrics_csv(const SimMetrics& m);

}  // namespace twinforge
