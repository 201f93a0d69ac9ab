#pragma once

// Twin services: data capture, mMTC load sweep, TIC scheduling, right-time
// synchronization and planned truck routing.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "twinforge/history_store.hpp"
#include "twinforge/net_sim.hpp"
#include "twinforge/rng.hpp"
#include "twinforge/scenario.hpp"

namespace twinforge {

struct ServiceReport {
  std::string service;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json metrics = nlohmann::json::object();
  std::vector<std::string> flags;
  std::vector<std::string> csv_header;
  std::vector<std::vector<std::string>> csv_rows;
};

nlohmann::json to_json(const ServiceReport& r);
std::string to_markdown(const ServiceReport& r);
std::string to_csv(const ServiceReport& r);

// ---- capture

struct ServiceDataset {
  ServiceId service = ServiceId::Mmtc;
  std::vector<TwinGraph> history;
  TwinGraph graph;  // cleaned slice of the realtime graph
  std::size_t dropped = 0;
};

/// Throws InsufficientHistory when the service needs history and there is none.
ServiceDataset capture_data(const HistoryStore& history, const TwinGraph& realtime, ServiceId service);

// ---- mMTC

inline constexpr std::array<double, 3> kMmtcLevels{0.20, 0.45, 0.70};

struct MmtcLevel {
  double ul_fraction = 0;
  GeneratedScenario scenario;
  SimMetrics metrics;
  std::optional<double> cov;
  double coverage = 0, hit_rate = 0;
};

std::vector<MmtcLevel> mmtc_sweep(const ScenarioSpec& spec, GeneratorBackend& backend);
ServiceReport run_mmtc(const ScenarioSpec& spec, GeneratorBackend& backend);

// ---- TIC

enum class TicAction { ServeOldest, ServeMostUrgent, ServeShortest, Idle };
inline constexpr std::size_t kTicActions = 4;

struct TicParams {
  double learning_rate = 0.02;
  double discount = 0.9;
  double epsilon = 0.1;
  std::size_t episodes = 1000;
  std::size_t eval_seeds = 10;
};

TicParams tic_params_from_json(const nlohmann::json& j);

/// Tabular policy over (occupancy bucket 0-4, slack bucket 0-3, head direction).
class TicPolicy : public ServicePolicy {
 public:
  using Table = std::array<std::array<std::array<std::array<double, kTicActions>, 2>, 4>, 5>;

  TicPolicy(TicParams params, std::uint64_t seed, bool learning);

  std::vector<std::size_t> select(const GatewayView& view) override;
  void feedback(std::size_t gateway, const SlotFeedback& fb) override;

  /// Clears per-run state; the table is kept.
  void begin_episode(std::size_t n_gateways);
  void set_learning(bool on) { learning_ = on; }

  double episode_return() const { return episode_return_; }
  const Table& table() const { return q_; }

  struct State {
    std::size_t occupancy, slack, direction;
  };
  static State observe(const GatewayView& view);
  static std::vector<std::size_t> order_for(TicAction a, const std::vector<Packet>& queue);

 private:
  TicAction greedy(const State& s) const;
  void settle(std::size_t gateway, const State* next);

  struct Pending {
    bool active = false;
    State state{};
    std::size_t action = 0;
    double reward = 0;
  };

  TicParams params_;
  Rng rng_;
  bool learning_;
  Table q_{};
  std::vector<Pending> pending_;
  double episode_return_ = 0;
};

struct TicResult {
  std::vector<double> policy_loss, fifo_loss;
  std::vector<double> training_returns;
  std::size_t wins = 0;  // held-out seeds with policy loss <= FIFO loss
  bool trained = false;
};

TicResult tic_train_and_evaluate(const ScenarioSpec& spec, const TicParams& params);
ServiceReport run_tic(const ScenarioSpec& spec, std::size_t training_episodes);

// ---- right-time synchronization

struct SyncWorldParams {
  std::size_t n_twins = 50;
  double drift_sigma = 0.05;  // per round
  double reversion = 0.5;     // fraction of the deviation from the mean kept each round
  double mean = 0.5;
  double initial_spread = 0.1;
};

struct SyncExperimentConfig {
  std::size_t rounds = 12;
  double twinning_rate = 0.8;
  std::vector<Strategy> strategies{Strategy::H, Strategy::HR, Strategy::HRGAI};
  double tolerance = 0.02;
  std::uint64_t seed = 1;
  std::optional<double> accuracy_target;  // stop a strategy once reached
  SyncWorldParams world;
};

SyncExperimentConfig sync_config_from_json(const nlohmann::json& j, std::uint64_t seed);

/// Ground truth that drifts each round: x <- mean + reversion * (x - mean) + sigma * N(0,1).
class SyncWorld {
 public:
  SyncWorld(const SyncWorldParams& p, std::uint64_t seed);
  const TwinGraph& truth() const { return truth_; }
  void step();

 private:
  SyncWorldParams params_;
  Rng rng_;
  TwinGraph truth_;
};

struct SyncCurve {
  Strategy strategy;
  std::vector<double> accuracy;
  std::vector<std::size_t> realtime_reads;
};

std::vector<SyncCurve> sync_curves(const SyncExperimentConfig& cfg);
ServiceReport run_right_time_sync(const SyncExperimentConfig& cfg);

// ---- planned truck routing

struct Bin {
  std::string id;
  double x = 0, y = 0;  // km
  double fill_level = 0;
  double fill_rate = 0;  // fraction per day
};

struct PtrInstance {
  std::vector<Bin> bins;
  double depot_x = 0, depot_y = 0;
  std::size_t truck_capacity = 0;  // bins per trip; 0 means unlimited
  double coef_fill = 1.0, coef_rate = 0.0;
};

struct PtrRoute {
  std::vector<std::string> selected;
  std::vector<std::string> order;  // visiting order; trips are separated by depot returns
  std::vector<std::size_t> trip_sizes;
  double length = 0;
  std::size_t missed = 0;  // unselected bins that overflow by tomorrow
  double missed_rate = 0;
};

PtrInstance random_ptr_instance(std::size_t n_bins, std::uint64_t seed, double extent_km = 5.0);
/// Waste-bin twins for an instance (depot and predictor settings are not part of the graph).
TwinGraph ptr_graph(const PtrInstance& instance);
PtrInstance ptr_instance_from(const ServiceDataset& data, const nlohmann::json& options = nlohmann::json::object());
PtrRoute plan_route(const PtrInstance& instance, double threshold);
ServiceReport run_ptr(const PtrInstance& instance, double threshold);

}  // namespace twinforge
