#include "twinforge/kpi.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "twinforge/error.hpp"
#include "twinforge/rng.hpp"

namespace twinforge {

namespace {

std::string fmt_num(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

std::string_view to_string(KpiId id) {
  switch (id) {
    case KpiId::Rho: return "rho";
    case KpiId::D: return "d";
    case KpiId::L: return "l";
    case KpiId::Alpha: return "alpha";
  }
  return "?";
}

double KpiVector::operator[](KpiId id) const { return const_cast<KpiVector&>(*this)[id]; }

double& KpiVector::operator[](KpiId id) {
  switch (id) {
    case KpiId::Rho: return rho;
    case KpiId::D: return d;
    case KpiId::L: return l;
    case KpiId::Alpha: return alpha;
  }
  return rho;
}

double WeightVector::operator[](KpiId id) const { return const_cast<WeightVector&>(*this)[id]; }

double& WeightVector::operator[](KpiId id) {
  switch (id) {
    case KpiId::Rho: return rho;
    case KpiId::D: return d;
    case KpiId::L: return l;
    case KpiId::Alpha: return alpha;
  }
  return rho;
}

std::string_view to_string(PriorityPair p) {
  switch (p) {
    case PriorityPair::None: return "None";
    case PriorityPair::DensityDeadline: return "DensityDeadline";
    case PriorityPair::LatencyDeadline: return "LatencyDeadline";
    case PriorityPair::DensityBuffer: return "DensityBuffer";
  }
  return "None";
}

PriorityPair priority_from_string(std::string_view s) {
  for (auto p : {PriorityPair::None, PriorityPair::DensityDeadline, PriorityPair::LatencyDeadline,
                 PriorityPair::DensityBuffer})
    if (s == to_string(p)) return p;
  throw Error(ErrorCode::ParseError, "unknown priority " + std::string(s));
}

std::optional<std::pair<KpiId, KpiId>> kpis_of(PriorityPair p) {
  switch (p) {
    case PriorityPair::DensityDeadline: return std::pair{KpiId::Rho, KpiId::D};
    case PriorityPair::LatencyDeadline: return std::pair{KpiId::L, KpiId::D};
    case PriorityPair::DensityBuffer: return std::pair{KpiId::Rho, KpiId::Alpha};
    case PriorityPair::None: break;
  }
  return std::nullopt;
}

std::string_view to_string(WeightMode m) {
  switch (m) {
    case WeightMode::Split: return "split";
    case WeightMode::Optimize: return "optimize";
    case WeightMode::Random: return "random";
  }
  return "split";
}

WeightMode weight_mode_from_string(std::string_view s) {
  if (s == "split") return WeightMode::Split;
  if (s == "optimize") return WeightMode::Optimize;
  if (s == "random") return WeightMode::Random;
  throw Error(ErrorCode::ParseError, "unknown weight mode " + std::string(s));
}

void Thresholds::validate() const {
  if (!(d_th > 0 && l_th > 0 && a_th > 0 && a_th <= 1))
    throw Error(ErrorCode::InvalidConfig, "thresholds must be positive with a_th <= 1");
}

KpiVector normalize_kpis(const RawMeasurements& raw) {
  if (raw.total_devices == 0) throw Error(ErrorCode::EmptyDenominator, "total_devices is zero");
  if (raw.deadline_total == 0) throw Error(ErrorCode::EmptyDenominator, "deadline_total is zero");
  if (raw.served_devices > raw.total_devices || raw.deadline_hits > raw.deadline_total)
    throw Error(ErrorCode::OutOfRange, "counts exceed their totals");
  if (raw.mean_latency_ms < 0 || raw.latency_budget_ms <= 0 || !in_unit(raw.mean_buffer_occupancy) ||
      !in_unit(raw.accuracy))
    throw Error(ErrorCode::OutOfRange, "raw measurement outside its domain");

  KpiVector k;
  k.rho = static_cast<double>(raw.served_devices) / static_cast<double>(raw.total_devices);
  k.d = static_cast<double>(raw.deadline_hits) / static_cast<double>(raw.deadline_total);
  k.l = std::clamp(1.0 - raw.mean_latency_ms / raw.latency_budget_ms, 0.0, 1.0);
  k.alpha = 1.0 - raw.mean_buffer_occupancy;
  return k;
}

PriorityPair select_priority(const RawMeasurements& raw, const Thresholds& th) {
  if (raw.device_density > th.d_th) return PriorityPair::DensityDeadline;
  if (raw.mean_latency_ms < th.l_th) return PriorityPair::LatencyDeadline;
  if (raw.accuracy > th.a_th) return PriorityPair::DensityBuffer;
  return PriorityPair::None;
}

WeightVector random_weights(std::uint64_t seed, double w_min) {
  if (!(w_min > 0 && 4 * w_min < 1)) throw Error(ErrorCode::InfeasibleFloors, "w_min " + fmt_num(w_min));
  Rng rng(seed);
  std::array<double, 4> e{};
  for (auto& x : e) x = rng.exponential();
  const double total = e[0] + e[1] + e[2] + e[3];
  const double free = 1.0 - 4 * w_min;
  WeightVector w;
  for (std::size_t i = 0; i < 4; ++i) w[kAllKpis[i]] = w_min + free * e[i] / total;
  w.prioritized = PriorityPair::None;
  return w;
}

WeightVector split_weights(PriorityPair pair, double share, double w_min) {
  auto ids = kpis_of(pair);
  if (!ids) throw Error(ErrorCode::InvalidShare, "split needs a prioritized pair");
  if (!(share > 0.5 && share < 1.0)) throw Error(ErrorCode::InvalidShare, "share " + fmt_num(share));
  const double rest = (1.0 - share) / 2;
  if (rest < w_min) throw Error(ErrorCode::InvalidShare, "remainder below w_min for share " + fmt_num(share));
  WeightVector w;
  for (KpiId id : kAllKpis) w[id] = rest;
  w[ids->first] = share / 2;
  w[ids->second] = share / 2;
  w.prioritized = pair;
  return w;
}

WeightVector assign_weights(PriorityPair pair, WeightMode mode, const KpiVector& kpis, std::uint64_t seed,
                            const OptimizerParams& params) {
  if (pair == PriorityPair::None || mode == WeightMode::Random) return random_weights(seed, params.w_min);
  if (mode == WeightMode::Split) return split_weights(pair, params.priority_share, params.w_min);
  return solve_max_weights(kpis, pair, params.w_min, params.w_pmin);
}

double objective(const WeightVector& w, const KpiVector& t) {
  if (std::abs(w.sum() - 1.0) > kSumTolerance) throw Error(ErrorCode::InvariantViolation, "weights sum to " + fmt_num(w.sum()));
  double o = 0;
  for (KpiId id : kAllKpis) {
    if (!(w[id] > 0)) throw Error(ErrorCode::InvariantViolation, "non-positive weight for " + std::string(to_string(id)));
    if (!in_unit(t[id])) throw Error(ErrorCode::OutOfRange, "KPI outside [0,1]: " + std::string(to_string(id)));
    o += w[id] * t[id];
  }
  return o;
}

WeightVector solve_max_weights(const KpiVector& t, PriorityPair pair, double w_min, double w_pmin) {
  auto ids = kpis_of(pair);
  if (!ids) throw Error(ErrorCode::InvalidConfig, "solve_max_weights needs a prioritized pair");
  if (!(w_min > 0 && w_pmin > w_min && 2 * w_min + 2 * w_pmin < 1))
    throw Error(ErrorCode::InfeasibleFloors, "w_min " + fmt_num(w_min) + ", w_pmin " + fmt_num(w_pmin));

  WeightVector w;
  for (KpiId id : kAllKpis) w[id] = w_min;
  const double leftover = 1.0 - 2 * w_min - 2 * w_pmin;
  const auto [x, y] = *ids;
  if (std::abs(t[x] - t[y]) <= 1e-12) {
    w[x] = w_pmin + leftover / 2;
    w[y] = w_pmin + leftover / 2;
  } else if (t[x] > t[y]) {
    w[x] = w_pmin + leftover;
    w[y] = w_pmin;
  } else {
    w[x] = w_pmin;
    w[y] = w_pmin + leftover;
  }
  w.prioritized = pair;
  return w;
}

std::vector<std::string> weight_violations(const WeightVector& w, double w_min) {
  std::vector<std::string> out;
  if (std::abs(w.sum() - 1.0) > kSumTolerance) out.push_back("sum: sum=" + fmt_num(w.sum()));
  for (KpiId id : kAllKpis) {
    if (!std::isfinite(w[id]) || w[id] < w_min)
      out.push_back("floor: w_" + std::string(to_string(id)) + "=" + fmt_num(w[id]) + " below " + fmt_num(w_min));
  }
  if (auto ids = kpis_of(w.prioritized)) {
    double lo = std::min(w[ids->first], w[ids->second]);
    double hi = 0;
    for (KpiId id : kAllKpis)
      if (id != ids->first && id != ids->second) hi = std::max(hi, w[id]);
    if (!(lo > hi)) out.push_back("dominance: dominance broken (" + fmt_num(lo) + " <= " + fmt_num(hi) + ")");
  }
  return out;
}

nlohmann::json to_json(const KpiVector& k) {
  return {{"rho", k.rho}, {"d", k.d}, {"l", k.l}, {"alpha", k.alpha}};
}

nlohmann::json to_json(const WeightVector& w) {
  return {{"rho", w.rho}, {"d", w.d}, {"l", w.l}, {"alpha", w.alpha}, {"priority", to_string(w.prioritized)}};
}

KpiVector kpis_from_json(const nlohmann::json& j) {
  try {
    return {j.at("rho").get<double>(), j.at("d").get<double>(), j.at("l").get<double>(), j.at("alpha").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("kpi vector: ") + e.what());
  }
}

WeightVector weights_from_json(const nlohmann::json& j) {
  try {
    WeightVector w{j.at("rho").get<double>(), j.at("d").get<double>(), j.at("l").get<double>(),
                   j.at("alpha").get<double>()};
    w.prioritized = priority_from_string(j.value("priority", std::string("None")));
    return w;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("weight vector: ") + e.what());
  }
}

}  // namespace twinforge
