#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "twinforge/error.hpp"
#include "twinforge/experiment.hpp"

using namespace twinforge;

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  std::string seeds;
  std::string out = "twinforge-out";
  std::string backend;
  std::optional<std::size_t> parallel;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Single seed (also sets scenario.seed)");
  cmd->add_option("--seeds", c.seeds, "Seed list, e.g. 1..10 or 1,4,9");
  cmd->add_option("--out", c.out, "Output directory")->capture_default_str();
  cmd->add_option("--backend", c.backend, "Generator backend")->check(CLI::IsMember({"rule", "mock", "remote"}));
  cmd->add_option("--parallel", c.parallel, "Concurrent runs")->check(CLI::PositiveNumber);
}

void apply_common(const Common& c, ExperimentPlan& plan) {
  plan.out_dir = c.out;
  plan.parallelism = c.parallel;
  if (!c.seeds.empty()) plan.seeds = parse_seed_list(c.seeds);
  if (c.seed) {
    plan.overrides["scenario"]["seed"] = *c.seed;
    if (c.seeds.empty()) plan.seeds = {*c.seed};
  }
  if (!c.backend.empty()) plan.overrides["backend"]["kind"] = c.backend;
}

int execute(const ExperimentPlan& plan) {
  const ExperimentOutcome o = run_experiment(plan);
  if (!o.diagnostics.empty()) std::cerr << o.diagnostics << (o.diagnostics.back() == '\n' ? "" : "\n");
  if (o.exit_code == 2) return o.exit_code;
  std::size_t failed = 0;
  for (const auto& r : o.runs) failed += r.ok ? 0 : 1;
  std::cout << "runs: " << o.runs.size() - failed << " ok, " << failed << " failed\n"
            << "wrote " << o.files.size() << " files to " << plan.out_dir.string() << "\n"
            << "config hash: " << o.config_hash << "\n";
  return o.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"twinforge: scenario twins, network simulation and twin services"};
  app.require_subcommand(1);

  Common run_c, sweep_c, sync_c;
  std::string run_spec, run_experiment_kind;
  auto* run = app.add_subcommand("run", "Run the experiment described by a spec file");
  run->add_option("spec", run_spec, "Spec file (JSON)")->required();
  run->add_option("--experiment", run_experiment_kind, "throughput|sync|mmtc|tic|ptr|all");
  add_common(run, run_c);

  std::string sweep_spec, sizes = "small,medium,large";
  auto* sweep = app.add_subcommand("sweep", "Throughput stability sweep over topology sizes");
  sweep->add_option("--spec", sweep_spec, "Spec file (JSON); defaults apply without one");
  sweep->add_option("--sizes", sizes, "Topology sizes")->capture_default_str();
  add_common(sweep, sweep_c);

  std::string sync_spec, strategies;
  std::optional<std::size_t> rounds;
  std::optional<double> rate;
  auto* sync = app.add_subcommand("sync", "Right-time synchronization accuracy curves");
  sync->add_option("--spec", sync_spec, "Spec file (JSON); defaults apply without one");
  sync->add_option("--rounds", rounds, "Twinning rounds")->check(CLI::PositiveNumber);
  sync->add_option("--rate", rate, "Twinning rate in (0,1]");
  sync->add_option("--strategies", strategies, "e.g. H,H+R,H+R+GAI");
  add_common(sync, sync_c);

  std::string validate_spec;
  auto* validate = app.add_subcommand("validate", "Parse and validate a spec file");
  validate->add_option("spec", validate_spec, "Spec file (JSON)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentPlan plan;
    if (*run) {
      plan.spec_path = run_spec;
      if (!run_experiment_kind.empty()) plan.experiment = experiment_kind_from_string(run_experiment_kind);
      apply_common(run_c, plan);
      return execute(plan);
    }
    if (*sweep) {
      if (!sweep_spec.empty()) plan.spec_path = sweep_spec;
      plan.experiment = ExperimentKind::Throughput;
      plan.sizes = parse_size_list(sizes);
      apply_common(sweep_c, plan);
      return execute(plan);
    }
    if (*sync) {
      if (!sync_spec.empty()) plan.spec_path = sync_spec;
      plan.experiment = ExperimentKind::Sync;
      if (rounds) plan.overrides["sync"]["rounds"] = *rounds;
      if (rate) plan.overrides["sync"]["twinning_rate"] = *rate;
      if (!strategies.empty()) {
        nlohmann::json list = nlohmann::json::array();
        std::string cur;
        for (char c : strategies + ",") {
          if (c == ',') {
            if (!cur.empty()) list.push_back(cur);
            cur.clear();
          } else {
            cur += c;
          }
        }
        plan.overrides["sync"]["strategies"] = list;
      }
      apply_common(sync_c, plan);
      return execute(plan);
    }
    if (*validate) {
      plan.spec_path = validate_spec;
      const ResolvedPlan p = resolve_plan(plan);
      std::cout << "valid: experiment " << to_string(p.kind) << ", " << p.seeds.size() << " seed(s), config hash "
                << p.config_hash << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  return 0;
}
