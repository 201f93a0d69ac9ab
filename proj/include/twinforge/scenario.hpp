#pragma once

// Scenario specs, next-state prediction and scenario generation through a
// pluggable backend with validation and a rule-based fallback.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "twinforge/history_store.hpp"
#include "twinforge/kpi.hpp"
#include "twinforge/net_sim.hpp"
#include "twinforge/twin_graph.hpp"

namespace twinforge {

enum class ScenarioKind { Base, HighDensity, Synchronization };
enum class ServiceId { Mmtc, Tic, Sync, Ptr };
enum class Strategy { H, HR, HRGAI };
enum class BackendKind { Rule, Mock, Remote };

std::string_view to_string(ScenarioKind k);
std::string_view to_string(ServiceId s);
std::string_view to_string(Strategy s);
std::string_view to_string(BackendKind b);
ScenarioKind scenario_kind_from_string(std::string_view s);
ServiceId service_from_string(std::string_view s);
Strategy strategy_from_string(std::string_view s);
BackendKind backend_kind_from_string(std::string_view s);

/// Optional demands a scenario asks for; they feed priority selection.
struct KpiTargets {
  std::optional<double> density;
  std::optional<double> latency_ms;
  std::optional<double> accuracy;
};

struct BackendSettings {
  BackendKind kind = BackendKind::Rule;
  std::string model = "default";
  double timeout_s = 10.0;
  int retries = 2;
  std::vector<std::string> mock_responses;  // canned replies for the mock backend
};

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::Base;
  SizeClass size_class = SizeClass::Small;
  ServiceId service = ServiceId::Mmtc;
  Thresholds thresholds;
  WeightMode weight_mode = WeightMode::Random;
  KpiTargets targets;
  std::uint64_t seed = 1;
  Strategy strategy = Strategy::HRGAI;
  double twinning_rate = 0.8;
  OptimizerParams optimizer;
  nlohmann::json sim = nlohmann::json::object();  // SimConfig overrides
  BackendSettings backend;
  nlohmann::json services = nlohmann::json::object();  // sync / tic / ptr / experiment sections, untouched
};

std::vector<std::string> spec_violations(const ScenarioSpec& spec);

/// Parses and validates; throws ConfigError.
ScenarioSpec spec_from_json(const nlohmann::json& j);
ScenarioSpec load_spec(const std::filesystem::path& path);
nlohmann::json to_json(const ScenarioSpec& spec);

struct GeneratedScenario {
  TwinGraph predicted_graph;
  SimConfig sim_config;
  WeightVector weights;
  PriorityPair priority = PriorityPair::None;
  Strategy provenance = Strategy::HRGAI;
  std::string backend_id;

  bool operator==(const GeneratedScenario&) const = default;
};

nlohmann::json to_json(const GeneratedScenario& s);
/// Strict parse; throws ParseError on anything missing or mistyped.
GeneratedScenario scenario_from_json(const nlohmann::json& j);

/// Every structural and weight violation; empty means valid.
std::vector<std::string> validate_scenario(const GeneratedScenario& s, double w_min = 0.05);

struct PredictionStats {
  std::size_t realtime_reads = 0;
  std::vector<std::string> synced;  // twin ids taken from the realtime graph
};

inline constexpr double kGaiDamping = 0.5;

/// H: linear trend over the last two snapshots. H+R: a seeded subset of
/// ceil(fraction * |twins|) twins copies the realtime graph. H+R+GAI: as H+R,
/// and unsynced twins move halfway from their trend toward the mean of the
/// realtime values that were read.
TwinGraph predict_next_state(const std::vector<TwinGraph>& history, const TwinGraph& realtime, Strategy strategy,
                             double synced_fraction, std::uint64_t seed, PredictionStats* stats = nullptr);

/// Everything the pipeline decided before asking the backend.
struct GenerationContext {
  std::vector<TwinGraph> history;
  TwinGraph realtime;
  ScenarioSpec spec;
  RawMeasurements demands;
  KpiVector kpis;
  PriorityPair priority = PriorityPair::None;
  WeightVector weights;
  SimConfig sim_config;
};

nlohmann::json to_json(const GenerationContext& ctx);

class GeneratorBackend {
 public:
  virtual ~GeneratorBackend() = default;
  virtual std::string id() const = 0;
  /// Returns a candidate; throws BackendFailure when no candidate can be produced.
  virtual GeneratedScenario propose(const GenerationContext& ctx) = 0;
};

class RuleBackend : public GeneratorBackend {
 public:
  std::string id() const override { return "rule"; }
  GeneratedScenario propose(const GenerationContext& ctx) override;
};

/// Replies with canned JSON strings in turn; an empty list means unavailable.
class MockBackend : public GeneratorBackend {
 public:
  explicit MockBackend(std::vector<std::string> responses) : responses_(std::move(responses)) {}
  std::string id() const override { return "mock"; }
  GeneratedScenario propose(const GenerationContext& ctx) override;
  std::size_t calls() const { return calls_; }

 private:
  std::vector<std::string> responses_;
  std::size_t calls_ = 0;
};

struct RemoteSettings {
  std::string url;  // e.g. https://host/v1/chat/completions
  std::string key;
  std::string model = "default";
  double timeout_s = 10.0;
  int retries = 2;

  /// Reads TWINFORGE_LLM_URL and TWINFORGE_LLM_KEY.
  static RemoteSettings from_env(const BackendSettings& b);
};

/// Chat-completion style client asking for a single JSON scenario document.
class RemoteBackend : public GeneratorBackend {
 public:
  explicit RemoteBackend(RemoteSettings s) : settings_(std::move(s)) {}
  std::string id() const override { return "remote"; }
  GeneratedScenario propose(const GenerationContext& ctx) override;
  std::size_t attempts() const { return attempts_; }

 private:
  RemoteSettings settings_;
  std::mutex mutex_;
  std::size_t attempts_ = 0;
};

std::unique_ptr<GeneratorBackend> make_backend(const BackendSettings& settings);

/// Extracts the scenario document from a chat-completion reply or a bare object.
GeneratedScenario parse_backend_reply(const std::string& body);

/// The demand side of priority selection for a spec.
RawMeasurements scenario_demands(const ScenarioSpec& spec, const SimConfig& topology);

GenerationContext prepare_context(const HistoryStore& history, const TwinGraph& realtime, const ScenarioSpec& spec);

GeneratedScenario generate(const HistoryStore& history, const TwinGraph& realtime, const ScenarioSpec& spec,
                           GeneratorBackend& backend);

}  // namespace twinforge
