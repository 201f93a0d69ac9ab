#pragma once

// Experiment harness: resolves a plan against a spec file, fans runs out over
// seeds and writes metrics, reports, plots and a manifest.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "twinforge/net_sim.hpp"
#include "twinforge/scenario.hpp"

namespace twinforge {

enum class ExperimentKind { Throughput, Sync, Mmtc, Tic, Ptr, All };

std::string_view to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(std::string_view s);

/// "1..10", "7" or "1,4,9". Throws ConfigError.
std::vector<std::uint64_t> parse_seed_list(std::string_view text);
/// "small,medium,large". Throws ConfigError.
std::vector<SizeClass> parse_size_list(std::string_view text);

struct MeanCi {
  double mean = 0, low = 0, high = 0;
  std::size_t n = 0;
};

/// Mean with a two-sided 95% Student-t interval; a single sample has a zero-width interval.
MeanCi mean_ci95(const std::vector<double>& xs);

std::string sha256_hex(std::string_view data);

struct ExperimentPlan {
  std::optional<std::filesystem::path> spec_path;  // none: built-in defaults
  nlohmann::json overrides = nlohmann::json::object();  // merge-patched onto the spec document
  std::vector<std::uint64_t> seeds;                     // empty: experiment.seeds, else scenario.seed
  std::filesystem::path out_dir = "twinforge-out";
  std::optional<std::size_t> parallelism;
  std::optional<ExperimentKind> experiment;  // none: experiment.kind, else the spec's service
  std::vector<SizeClass> sizes;              // throughput only; empty: experiment.sizes, else all three
};

struct ResolvedPlan {
  nlohmann::json document;  // spec after overrides
  ScenarioSpec spec;
  ExperimentKind kind = ExperimentKind::Mmtc;
  std::vector<std::uint64_t> seeds;
  std::vector<SizeClass> sizes;
  std::size_t parallelism = 1;
  std::string config_hash;
};

/// Loads, patches and validates; throws ConfigError.
ResolvedPlan resolve_plan(const ExperimentPlan& plan);

struct RunRecord {
  std::string id;
  bool ok = true;
  std::string error;
};

struct ExperimentOutcome {
  int exit_code = 0;
  std::vector<RunRecord> runs;
  std::vector<std::string> files;  // relative to out_dir, manifest included
  std::string config_hash;
  std::string diagnostics;
};

/// Never throws for run failures; a bad plan yields exit code 2 and no artifacts.
ExperimentOutcome run_experiment(const ExperimentPlan& plan);

}  // namespace twinforge
