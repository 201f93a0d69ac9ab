#include "twinforge/net_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "twinforge/error.hpp"
#include "twinforge/rng.hpp"

namespace twinforge {

std::string_view to_string(SizeClass s) {
  switch (s) {
    case SizeClass::Small: return "small";
    case SizeClass::Medium: return "medium";
    case SizeClass::Large: return "large";
  }
  return "small";
}

SizeClass size_class_from_string(std::string_view s) {
  if (s == "small") return SizeClass::Small;
  if (s == "medium") return SizeClass::Medium;
  if (s == "large") return SizeClass::Large;
  throw Error(ErrorCode::ParseError, "unknown size class " + std::string(s));
}

std::size_t SimConfig::gateway_of(std::size_t sensor) const {
  return assignment.empty() ? sensor % n_gateways : assignment.at(sensor);
}

std::vector<std::string> config_violations(const SimConfig& c) {
  std::vector<std::string> v;
  if (c.n_sensors == 0) v.push_back("n_sensors must be > 0");
  if (c.n_gateways == 0) v.push_back("n_gateways must be > 0");
  if (!(c.ul_fraction >= 0 && c.ul_fraction <= 1)) v.push_back("ul_fraction outside [0,1]");
  if (c.payload_limit == 0) v.push_back("payload_limit must be > 0");
  if (c.gateway_capacity == 0) v.push_back("gateway_capacity must be > 0");
  if (c.buffer_capacity == 0) v.push_back("buffer_capacity must be > 0");
  if (c.min_deadline > c.deadline) v.push_back("min_deadline exceeds deadline");
  if (c.duration == 0) v.push_back("duration must be >= 1");
  if (!(c.rearrival_probability >= 0 && c.rearrival_probability <= 1)) v.push_back("rearrival_probability outside [0,1]");
  if (!(c.dl_probability >= 0 && c.dl_probability <= 1)) v.push_back("dl_probability outside [0,1]");
  if (!(c.slot_ms > 0)) v.push_back("slot_ms must be > 0");
  if (!(c.area_units > 0)) v.push_back("area_units must be > 0");
  if (!c.assignment.empty()) {
    if (c.assignment.size() != c.n_sensors) v.push_back("assignment size differs from n_sensors");
    for (std::size_t g : c.assignment)
      if (g >= c.n_gateways) {
        v.push_back("assignment references a missing gateway");
        break;
      }
  }
  return v;
}

void validate_config(const SimConfig& c) {
  auto v = config_violations(c);
  if (v.empty()) return;
  std::string msg;
  for (const auto& s : v) msg += (msg.empty() ? "" : "; ") + s;
  throw Error(ErrorCode::InvalidConfig, msg);
}

void apply_overrides(SimConfig& c, const nlohmann::json& o) {
  if (o.is_null()) return;
  if (!o.is_object()) throw Error(ErrorCode::ConfigError, "sim overrides must be an object");
  try {
    for (const auto& [key, val] : o.items()) {
      if (key == "n_sensors") c.n_sensors = val.get<std::size_t>();
      else if (key == "n_gateways") c.n_gateways = val.get<std::size_t>();
      else if (key == "ul_fraction") c.ul_fraction = val.get<double>();
      else if (key == "payload_limit") c.payload_limit = val.get<std::uint32_t>();
      else if (key == "gateway_capacity") c.gateway_capacity = val.get<std::uint32_t>();
      else if (key == "buffer_capacity") c.buffer_capacity = val.get<std::uint32_t>();
      else if (key == "min_deadline") c.min_deadline = val.get<std::uint32_t>();
      else if (key == "deadline") c.deadline = val.get<std::uint32_t>();
      else if (key == "duration") c.duration = val.get<std::uint32_t>();
      else if (key == "seed") c.seed = val.get<std::uint64_t>();
      else if (key == "rearrival_probability") c.rearrival_probability = val.get<double>();
      else if (key == "dl_probability") c.dl_probability = val.get<double>();
      else if (key == "slot_ms") c.slot_ms = val.get<double>();
      else if (key == "area_units") c.area_units = val.get<double>();
      else if (key == "weights") c.weights = weights_from_json(val);
      else if (key == "assignment") c.assignment = val.get<std::vector<std::size_t>>();
      else throw Error(ErrorCode::ConfigError, "unknown sim key " + key);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("sim section: ") + e.what());
  }
}

SimConfig build_topology(SizeClass size, const nlohmann::json& overrides, std::uint64_t seed) {
  SimConfig c;
  switch (size) {
    case SizeClass::Small: c.n_sensors = 50, c.n_gateways = 2; break;
    case SizeClass::Medium: c.n_sensors = 250, c.n_gateways = 8; break;
    case SizeClass::Large: c.n_sensors = 1000, c.n_gateways = 20; break;
  }
  c.seed = seed;
  apply_overrides(c, overrides);
  return c;
}

nlohmann::json to_json(const SimConfig& c) {
  nlohmann::json j = {{"n_sensors", c.n_sensors},
                      {"n_gateways", c.n_gateways},
                      {"ul_fraction", c.ul_fraction},
                      {"payload_limit", c.payload_limit},
                      {"gateway_capacity", c.gateway_capacity},
                      {"buffer_capacity", c.buffer_capacity},
                      {"min_deadline", c.min_deadline},
                      {"deadline", c.deadline},
                      {"duration", c.duration},
                      {"seed", c.seed},
                      {"rearrival_probability", c.rearrival_probability},
                      {"dl_probability", c.dl_probability},
                      {"slot_ms", c.slot_ms},
                      {"area_units", c.area_units},
                      {"weights", to_json(c.weights)}};
  if (!c.assignment.empty()) j["assignment"] = c.assignment;
  return j;
}

SimConfig sim_config_from_json(const nlohmann::json& j) {
  SimConfig c;
  apply_overrides(c, j);
  return c;
}

double SimMetrics::mean_latency_slots() const {
  if (latency_samples.empty()) return 0.0;
  double s = std::accumulate(latency_samples.begin(), latency_samples.end(), 0.0);
  return s / static_cast<double>(latency_samples.size());
}

double SimMetrics::loss_rate() const {
  return generated == 0 ? 0.0 : static_cast<double>(dropped) / static_cast<double>(generated);
}

std::vector<std::size_t> weighted_schedule(const std::vector<Packet>& queue, const WeightVector& w, std::int64_t now,
                                           const ScheduleContext& ctx) {
  std::vector<double> score(queue.size());
  for (std::size_t i = 0; i < queue.size(); ++i) {
    const Packet& p = queue[i];
    const double slack = static_cast<double>(std::max<std::int64_t>(0, p.deadline - now));
    const double urgency = 1.0 / (1.0 + slack);
    const bool served = ctx.sensor_served && p.src < ctx.sensor_served->size() && (*ctx.sensor_served)[p.src];
    const double fairness = served ? 0.0 : 1.0;
    const auto window = p.deadline - p.created_at;
    const double age = window > 0 ? static_cast<double>(now - p.created_at) / static_cast<double>(window) : 1.0;
    const double size_relief = static_cast<double>(p.size) / static_cast<double>(ctx.payload_limit);
    score[i] = w.d * urgency + w.rho * fairness + w.l * age + w.alpha * size_relief;
  }
  std::vector<std::size_t> order(queue.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] > score[b];
    const Packet &pa = queue[a], &pb = queue[b];
    if (pa.created_at != pb.created_at) return pa.created_at < pb.created_at;
    if (pa.src != pb.src) return pa.src < pb.src;
    return pa.seq < pb.seq;
  });
  return order;
}

std::vector<std::size_t> WeightedPolicy::select(const GatewayView& view) {
  ScheduleContext ctx{&view.sensor_served, view.config.payload_limit};
  return weighted_schedule(view.queue, view.config.weights, view.now, ctx);
}

std::vector<std::size_t> FifoPolicy::select(const GatewayView& view) {
  std::vector<std::size_t> order(view.queue.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return view.queue[a].seq < view.queue[b].seq; });
  return order;
}

SimMetrics run_sim(const SimConfig& config) {
  WeightedPolicy policy;
  return run_sim(config, policy);
}

SimMetrics run_sim(const SimConfig& config, ServicePolicy& policy) {
  validate_config(config);
  Rng rng(mix_seed(config.seed, 0));

  const auto n_ul = static_cast<std::size_t>(std::llround(config.ul_fraction * static_cast<double>(config.n_sensors)));
  std::vector<std::size_t> ul = rng.sample(config.n_sensors, n_ul);
  std::sort(ul.begin(), ul.end());

  SimMetrics m;
  m.active_sensors = ul.size();
  m.throughput_series.reserve(config.duration);
  m.queue_series.reserve(config.duration);

  std::vector<std::vector<Packet>> queues(config.n_gateways);
  std::vector<SlotFeedback> fb(config.n_gateways);
  std::vector<bool> served(config.n_sensors, false);
  std::uint64_t seq = 0;
  double occupancy_sum = 0;

  for (std::int64_t t = 0; t < static_cast<std::int64_t>(config.duration); ++t) {
    for (auto& f : fb) f = SlotFeedback{t, 0, 0, false};

    for (std::size_t s : ul) {
      if (t > 0 && !rng.bernoulli(config.rearrival_probability)) continue;
      Packet p;
      p.src = static_cast<std::uint32_t>(s);
      p.direction = rng.bernoulli(config.dl_probability) ? Direction::DL : Direction::UL;
      p.size = static_cast<std::uint32_t>(rng.integer(1, config.payload_limit));
      p.created_at = t;
      p.deadline = t + rng.integer(config.min_deadline, config.deadline);
      p.seq = seq++;
      ++m.generated;
      const std::size_t g = config.gateway_of(s);
      if (queues[g].size() < config.buffer_capacity) {
        queues[g].push_back(p);
      } else {
        ++m.dropped;
        ++fb[g].dropped;
      }
    }

    std::uint32_t delivered_now = 0;
    std::size_t queued_now = 0;
    for (std::size_t g = 0; g < config.n_gateways; ++g) {
      auto& q = queues[g];
      if (!q.empty()) {
        std::vector<std::size_t> order = policy.select(GatewayView{g, q, t, config, served});
        if (order.size() > config.gateway_capacity) order.resize(config.gateway_capacity);
        std::vector<bool> take(q.size(), false);
        for (std::size_t i : order) {
          if (i >= q.size() || take[i]) continue;
          take[i] = true;
          const Packet& p = q[i];
          ++m.delivered;
          ++m.deadline_hits;
          ++fb[g].delivered;
          ++delivered_now;
          m.latency_samples.push_back(static_cast<std::uint32_t>(t - p.created_at));
          served[p.src] = true;
        }
        std::vector<Packet> rest;
        rest.reserve(q.size());
        for (std::size_t i = 0; i < q.size(); ++i) {
          if (take[i]) continue;
          if (q[i].deadline <= t) {
            ++m.dropped;
            ++fb[g].dropped;
          } else {
            rest.push_back(q[i]);
          }
        }
        q.swap(rest);
      }
      queued_now += q.size();
      occupancy_sum += static_cast<double>(q.size()) / static_cast<double>(config.buffer_capacity);
      policy.feedback(g, fb[g]);
    }
    m.throughput_series.push_back(delivered_now);
    m.queue_series.push_back(static_cast<std::uint32_t>(queued_now));
  }

  for (std::size_t g = 0; g < config.n_gateways; ++g) {
    SlotFeedback last{static_cast<std::int64_t>(config.duration), 0, static_cast<std::uint32_t>(queues[g].size()), true};
    m.dropped += queues[g].size();
    policy.feedback(g, last);
  }

  m.deadline_total = m.generated;
  m.mean_buffer_occupancy =
      occupancy_sum / (static_cast<double>(config.duration) * static_cast<double>(config.n_gateways));
  for (std::size_t s : ul) m.served_sensors += served[s] ? 1 : 0;
  return m;
}

namespace {

template <typename T>
double cov(const std::vector<T>& series) {
  if (series.empty()) throw Error(ErrorCode::EmptySeries, "throughput series is empty");
  double mean = 0;
  for (T x : series) mean += static_cast<double>(x);
  mean /= static_cast<double>(series.size());
  if (mean <= 0) throw Error(ErrorCode::ZeroMean, "throughput series has zero mean");
  double var = 0;
  for (T x : series) var += (static_cast<double>(x) - mean) * (static_cast<double>(x) - mean);
  var /= static_cast<double>(series.size());
  return std::sqrt(var) / mean;
}

}  // namespace

double stability(const std::vector<std::uint32_t>& series) { return cov(series); }
double stability(const std::vector<double>& series) { return cov(series); }

RawMeasurements extract_raw_measurements(const SimMetrics& m, const SimConfig& c, double accuracy,
                                         double latency_budget_ms) {
  RawMeasurements r;
  r.device_density = static_cast<double>(c.n_sensors) / c.area_units;
  r.served_devices = m.served_sensors;
  r.total_devices = m.active_sensors;
  r.deadline_hits = m.deadline_hits;
  r.deadline_total = m.deadline_total;
  r.mean_latency_ms = m.mean_latency_slots() * c.slot_ms;
  r.latency_budget_ms = latency_budget_ms;
  r.mean_buffer_occupancy = m.mean_buffer_occupancy;
  r.accuracy = accuracy;
  return r;
}

nlohmann::json summary_json(const SimMetrics& m) {
  nlohmann::json j = {{"generated", m.generated},
                      {"delivered", m.delivered},
                      {"dropped", m.dropped},
                      {"deadline_hits", m.deadline_hits},
                      {"deadline_total", m.deadline_total},
                      {"loss_rate", m.loss_rate()},
                      {"mean_latency_slots", m.mean_latency_slots()},
                      {"mean_buffer_occupancy", m.mean_buffer_occupancy},
                      {"active_sensors", m.active_sensors},
                      {"served_sensors", m.served_sensors}};
  try {
    j["throughput_cov"] = stability(m.throughput_series);
  } catch (const Error&) {
    j["throughput_cov"] = nullptr;
  }
  return j;
}

std::string metrics_csv(const SimMetrics& m) {
  std::ostringstream os;
  os << "slot,delivered,queue_occupancy\n";
  for (std::size_t t = 0; t < m.throughput_series.size(); ++t)
    os << t << ',' << m.throughput_series[t] << ',' << m.queue_series[t] << '\n';
  return os.str();
}

}  // namespace twinforge
