#pragma once

// KPI scores, priority selection, weight assignment and the weighted objective.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace twinforge {

enum class KpiId { Rho, D, L, Alpha };  // canonical order

inline constexpr std::array<KpiId, 4> kAllKpis{KpiId::Rho, KpiId::D, KpiId::L, KpiId::Alpha};

std::string_view to_string(KpiId id);

/// Four scores in [0,1], higher is better.
struct KpiVector {
  double rho = 0, d = 0, l = 0, alpha = 0;

  double operator[](KpiId id) const;
  double& operator[](KpiId id);
  bool operator==(const KpiVector&) const = default;
};

enum class PriorityPair { None, DensityDeadline, LatencyDeadline, DensityBuffer };

std::string_view to_string(PriorityPair p);
PriorityPair priority_from_string(std::string_view s);

/// The two prioritized KPIs, or nothing for None.
std::optional<std::pair<KpiId, KpiId>> kpis_of(PriorityPair p);

struct WeightVector {
  double rho = 0.25, d = 0.25, l = 0.25, alpha = 0.25;
  PriorityPair prioritized = PriorityPair::None;

  double operator[](KpiId id) const;
  double& operator[](KpiId id);
  double sum() const { return rho + d + l + alpha; }
  bool operator==(const WeightVector&) const = default;
};

struct RawMeasurements {
  double device_density = 0;  // devices per area unit
  std::uint64_t served_devices = 0, total_devices = 0;
  std::uint64_t deadline_hits = 0, deadline_total = 0;
  double mean_latency_ms = 0;
  double latency_budget_ms = 9.0;
  double mean_buffer_occupancy = 0;
  double accuracy = 0;
};

struct Thresholds {
  double d_th = 50;
  double l_th = 0.9;  // ms
  double a_th = 0.97;

  void validate() const;
};

struct OptimizerParams {
  double w_min = 0.05;
  double w_pmin = 0.10;
  double priority_share = 0.7;
  double l_max = 9.0;  // ms, ten times the latency threshold
};

enum class WeightMode { Split, Optimize, Random };

std::string_view to_string(WeightMode m);
WeightMode weight_mode_from_string(std::string_view s);

inline constexpr double kSumTolerance = 1e-9;

/// Throws EmptyDenominator on zero totals, OutOfRange on inconsistent counts.
KpiVector normalize_kpis(const RawMeasurements& raw);

/// First matching case wins: density, then latency, then accuracy.
PriorityPair select_priority(const RawMeasurements& raw, const Thresholds& th);

/// Seeded point on the simplex with every component >= w_min.
WeightVector random_weights(std::uint64_t seed, double w_min = 0.05);

/// The pair shares `share` equally, the others split the rest.
WeightVector split_weights(PriorityPair pair, double share, double w_min = 0.05);

WeightVector assign_weights(PriorityPair pair, WeightMode mode, const KpiVector& kpis, std::uint64_t seed,
                            const OptimizerParams& params = {});

/// O = sum of w_i * T_i. Throws InvariantViolation when the weights are off the simplex.
double objective(const WeightVector& w, const KpiVector& t);

/// Closed-form maximizer of the objective with non-prioritized weights at w_min
/// and prioritized weights at least w_pmin.
WeightVector solve_max_weights(const KpiVector& t, PriorityPair pair, double w_min = 0.05, double w_pmin = 0.10);

/// Every broken weight constraint, empty when the vector is admissible.
std::vector<std::string> weight_violations(const WeightVector& w, double w_min = 0.05);

nlohmann::json to_json(const KpiVector& k);
nlohmann::json to_json(const WeightVector& w);
KpiVector kpis_from_json(const nlohmann::json& j);
WeightVector weights_from_json(const nlohmann::json& j);

}  // namespace twinforge
