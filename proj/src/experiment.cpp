#include "twinforge/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "twinforge/error.hpp"
#include "twinforge/format.hpp"
#include "twinforge/network_twin.hpp"
#include "twinforge/services.hpp"
#include "twinforge/svg.hpp"
#include "twinforge/twin_json.hpp"

namespace twinforge {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Throughput: return "throughput";
    case ExperimentKind::Sync: return "sync";
    case ExperimentKind::Mmtc: return "mmtc";
    case ExperimentKind::Tic: return "tic";
    case ExperimentKind::Ptr: return "ptr";
    case ExperimentKind::All: return "all";
  }
  return "?";
}

ExperimentKind experiment_kind_from_string(std::string_view s) {
  for (auto k : {ExperimentKind::Throughput, ExperimentKind::Sync, ExperimentKind::Mmtc, ExperimentKind::Tic,
                 ExperimentKind::Ptr, ExperimentKind::All})
    if (to_string(k) == s) return k;
  throw Error(ErrorCode::ConfigError, "unknown experiment '" + std::string(s) + "'");
}

namespace {

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::uint64_t parse_u64(const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw Error(ErrorCode::ConfigError, "bad seed '" + s + "'");
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigError, "bad seed '" + s + "'");
  }
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> seeds;
  const std::string t(text);
  if (const auto dots = t.find(".."); dots != std::string::npos) {
    const std::uint64_t lo = parse_u64(t.substr(0, dots)), hi = parse_u64(t.substr(dots + 2));
    if (hi < lo || hi - lo > 100000) throw Error(ErrorCode::ConfigError, "bad seed range '" + t + "'");
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
  } else {
    for (const auto& part : split(t, ',')) seeds.push_back(parse_u64(part));
  }
  return seeds;
}

std::vector<SizeClass> parse_size_list(std::string_view text) {
  std::vector<SizeClass> sizes;
  try {
    for (const auto& part : split(text, ',')) sizes.push_back(size_class_from_string(part));
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return sizes;
}

MeanCi mean_ci95(const std::vector<double>& xs) {
  MeanCi r;
  r.n = xs.size();
  if (xs.empty()) return r;
  r.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  r.low = r.high = r.mean;
  if (xs.size() < 2) return r;
  double ss = 0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  boost::math::students_t dist(static_cast<double>(xs.size() - 1));
  const double half = boost::math::quantile(boost::math::complement(dist, 0.025)) * sd / std::sqrt(double(xs.size()));
  r.low = r.mean - half;
  r.high = r.mean + half;
  return r;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::InvariantViolation, "sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (j.is_null()) return;
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, where + " must be an object");
  for (const auto& [key, val] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw Error(ErrorCode::ConfigError, "unknown key '" + key + "' in " + where);
  }
}

struct PtrOptions {
  std::size_t n_bins = 30;
  double extent_km = 5.0;
  double threshold = 0.7;
  json instance = json::object();  // depot / capacity / predictor overrides
};

PtrOptions ptr_options(const json& j) {
  check_keys(j, {"n_bins", "extent_km", "threshold", "depot_x", "depot_y", "truck_capacity", "coef_fill", "coef_rate"},
             "ptr");
  PtrOptions o;
  if (j.is_null()) return o;
  try {
    o.n_bins = j.value("n_bins", o.n_bins);
    o.extent_km = j.value("extent_km", o.extent_km);
    o.threshold = j.value("threshold", o.threshold);
    for (const char* k : {"depot_x", "depot_y", "truck_capacity", "coef_fill", "coef_rate"})
      if (j.contains(k)) o.instance[k] = j.at(k);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("ptr section: ") + e.what());
  }
  if (!(o.threshold > 0 && o.threshold < 1)) throw Error(ErrorCode::ConfigError, "ptr threshold outside (0,1)");
  if (!(o.extent_km > 0)) throw Error(ErrorCode::ConfigError, "ptr extent_km must be > 0");
  return o;
}

ExperimentKind kind_for(ServiceId s) {
  switch (s) {
    case ServiceId::Mmtc: return ExperimentKind::Mmtc;
    case ServiceId::Tic: return ExperimentKind::Tic;
    case ServiceId::Sync: return ExperimentKind::Sync;
    case ServiceId::Ptr: return ExperimentKind::Ptr;
  }
  return ExperimentKind::Mmtc;
}

bool includes(ExperimentKind plan, ExperimentKind k) { return plan == k || plan == ExperimentKind::All; }

}  // namespace

ResolvedPlan resolve_plan(const ExperimentPlan& plan) {
  ResolvedPlan r;
  json doc = json::object();
  if (plan.spec_path) {
    std::ifstream in(*plan.spec_path);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot open spec " + plan.spec_path->string());
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ConfigError, plan.spec_path->string() + ": " + e.what());
    }
    if (!doc.is_object()) throw Error(ErrorCode::ConfigError, "spec must be a JSON object");
  }
  if (!plan.overrides.is_object()) throw Error(ErrorCode::ConfigError, "overrides must be an object");
  doc.merge_patch(plan.overrides);
  r.spec = spec_from_json(doc);

  const json exp = doc.value("experiment", json::object());
  check_keys(exp, {"kind", "seeds", "sizes", "parallelism"}, "experiment");
  try {
    if (plan.experiment) r.kind = *plan.experiment;
    else if (exp.contains("kind")) r.kind = experiment_kind_from_string(exp.at("kind").get<std::string>());
    else r.kind = kind_for(r.spec.service);

    if (!plan.seeds.empty()) {
      r.seeds = plan.seeds;
    } else if (exp.contains("seeds")) {
      const json& s = exp.at("seeds");
      if (s.is_string()) r.seeds = parse_seed_list(s.get<std::string>());
      else r.seeds = s.get<std::vector<std::uint64_t>>();
    } else {
      r.seeds = {r.spec.seed};
    }

    if (!plan.sizes.empty()) {
      r.sizes = plan.sizes;
    } else if (exp.contains("sizes")) {
      const json& s = exp.at("sizes");
      if (s.is_string()) {
        r.sizes = parse_size_list(s.get<std::string>());
      } else {
        for (const auto& x : s) r.sizes.push_back(size_class_from_string(x.get<std::string>()));
      }
    } else {
      r.sizes = {SizeClass::Small, SizeClass::Medium, SizeClass::Large};
    }

    r.parallelism = plan.parallelism ? *plan.parallelism : exp.value("parallelism", std::size_t{1});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("experiment section: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    throw Error(ErrorCode::ConfigError, e.what());
  }
  if (r.seeds.empty()) throw Error(ErrorCode::ConfigError, "seed list is empty");
  if (std::set<std::uint64_t>(r.seeds.begin(), r.seeds.end()).size() != r.seeds.size())
    throw Error(ErrorCode::ConfigError, "seed list has duplicates");
  if (r.sizes.empty()) throw Error(ErrorCode::ConfigError, "size list is empty");
  if (r.parallelism < 1) throw Error(ErrorCode::ConfigError, "parallelism must be >= 1");

  // Service sections are validated up front so a bad plan writes nothing.
  check_keys(doc.value("sync", json()), {"rounds", "twinning_rate", "tolerance", "strategies", "accuracy_target", "world"},
             "sync");
  check_keys(doc.value("sync", json::object()).value("world", json()),
             {"n_twins", "drift_sigma", "reversion", "mean", "initial_spread"}, "sync.world");
  check_keys(doc.value("tic", json()), {"learning_rate", "discount", "epsilon", "episodes", "eval_seeds"}, "tic");
  SyncExperimentConfig sc = sync_config_from_json(doc.value("sync", json()), r.seeds.front());
  if (sc.rounds < 1 || !(sc.twinning_rate > 0 && sc.twinning_rate <= 1) || !(sc.tolerance >= 0))
    throw Error(ErrorCode::ConfigError, "sync section out of range");
  tic_params_from_json(doc.value("tic", json()));
  ptr_options(doc.value("ptr", json()));

  json sizes = json::array();
  for (SizeClass s : r.sizes) sizes.push_back(to_string(s));
  r.document = doc;
  r.config_hash = sha256_hex(json{{"spec", doc}, {"experiment", to_string(r.kind)}, {"seeds", r.seeds}, {"sizes", sizes}}.dump());
  return r;
}

namespace {

struct TaskOutput {
  ServiceReport report;
  std::vector<std::pair<std::string, std::string>> files;  // extra relative path -> content
  std::optional<TwinGraph> snapshot;
};

struct Task {
  std::string id;
  ExperimentKind kind;
  std::function<TaskOutput()> run;
};

std::string csv_line(const std::vector<std::string>& cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) s += (i ? "," : "") + cells[i];
  return s + "\n";
}

std::string fmt_opt(const json& v, int precision = 6) {
  return v.is_number() ? num(v.get<double>(), precision) : std::string("nan");
}

TaskOutput throughput_task(const ScenarioSpec& base, SizeClass size, std::uint64_t seed, bool prioritized) {
  ScenarioSpec s = base;
  s.size_class = size;
  s.seed = seed;
  s.service = ServiceId::Mmtc;
  s.kind = prioritized ? ScenarioKind::HighDensity : ScenarioKind::Base;
  s.weight_mode = prioritized ? WeightMode::Split : WeightMode::Random;
  const SimConfig topology = build_topology(size, s.sim, seed);
  const TwinGraph realtime = build_network_graph(topology, standard_models(), 0);
  auto backend = make_backend(s.backend);
  const GeneratedScenario gen = generate(HistoryStore{}, realtime, s, *backend);
  const SimMetrics m = run_sim(gen.sim_config);

  TaskOutput out;
  ServiceReport& r = out.report;
  r.service = "throughput";
  r.seed = seed;
  r.config = to_json(s);
  json cov = nullptr;
  try {
    cov = stability(m.throughput_series);
  } catch (const Error&) {
  }
  const double hit = m.deadline_total ? double(m.deadline_hits) / double(m.deadline_total) : 0.0;
  r.metrics = {{"size", to_string(size)},
               {"scenario", prioritized ? "high-density" : "base"},
               {"priority", to_string(gen.priority)},
               {"weights", to_json(gen.weights)},
               {"backend_id", gen.backend_id},
               {"throughput_cov", cov},
               {"loss_rate", m.loss_rate()},
               {"hit_rate", hit},
               {"mean_latency_ms", m.mean_latency_slots() * gen.sim_config.slot_ms},
               {"summary", summary_json(m)}};
  const std::string name = std::string(to_string(size)) + "_" + (prioritized ? "high-density" : "base") + "_seed" +
                           std::to_string(seed);
  out.files.emplace_back("metrics/throughput_" + name + ".csv", metrics_csv(m));
  if (!prioritized) out.snapshot = realtime;
  return out;
}

TaskOutput sync_task(const json& doc, std::uint64_t seed) {
  const SyncExperimentConfig cfg = sync_config_from_json(doc.value("sync", json()), seed);
  TaskOutput out;
  out.report = run_right_time_sync(cfg);
  out.snapshot = SyncWorld(cfg.world, mix_seed(seed, 0)).truth();
  return out;
}

TaskOutput mmtc_task(const ScenarioSpec& base, std::uint64_t seed) {
  ScenarioSpec s = base;
  s.seed = seed;
  s.service = ServiceId::Mmtc;
  auto backend = make_backend(s.backend);
  TaskOutput out;
  out.report = run_mmtc(s, *backend);
  out.snapshot = build_network_graph(build_topology(s.size_class, s.sim, seed), standard_models(), 0);
  return out;
}

TaskOutput tic_task(const ScenarioSpec& base, const json& doc, std::uint64_t seed) {
  ScenarioSpec s = base;
  s.seed = seed;
  s.service = ServiceId::Tic;
  const TicParams p = tic_params_from_json(doc.value("tic", json()));
  TaskOutput out;
  out.report = run_tic(s, p.episodes);
  out.snapshot = build_network_graph(build_topology(s.size_class, s.sim, seed), standard_models(), 0);
  return out;
}

TaskOutput ptr_task(const json& doc, std::uint64_t seed) {
  const PtrOptions o = ptr_options(doc.value("ptr", json()));
  const PtrInstance generated = random_ptr_instance(o.n_bins, seed, o.extent_km);
  const TwinGraph graph = ptr_graph(generated);
  json options = {{"depot_x", generated.depot_x},
                  {"depot_y", generated.depot_y},
                  {"truck_capacity", generated.truck_capacity},
                  {"coef_fill", generated.coef_fill},
                  {"coef_rate", generated.coef_rate}};
  options.merge_patch(o.instance);
  const ServiceDataset data = capture_data(HistoryStore{}, graph, ServiceId::Ptr);
  TaskOutput out;
  out.report = run_ptr(ptr_instance_from(data, options), o.threshold);
  out.report.seed = seed;
  out.report.metrics["dropped_twins"] = data.dropped;
  out.snapshot = graph;
  return out;
}

std::vector<Task> build_tasks(const ResolvedPlan& p) {
  std::vector<Task> tasks;
  const ScenarioSpec& spec = p.spec;
  const json& doc = p.document;
  if (includes(p.kind, ExperimentKind::Throughput)) {
    for (SizeClass size : p.sizes)
      for (std::uint64_t seed : p.seeds)
        for (bool prioritized : {false, true})
          tasks.push_back({"throughput/" + std::string(to_string(size)) + "/" + (prioritized ? "high-density" : "base") +
                               "/seed" + std::to_string(seed),
                           ExperimentKind::Throughput,
                           [=] { return throughput_task(spec, size, seed, prioritized); }});
  }
  for (std::uint64_t seed : p.seeds) {
    const std::string tag = "/seed" + std::to_string(seed);
    if (includes(p.kind, ExperimentKind::Sync))
      tasks.push_back({"sync" + tag, ExperimentKind::Sync, [=] { return sync_task(doc, seed); }});
    if (includes(p.kind, ExperimentKind::Mmtc))
      tasks.push_back({"mmtc" + tag, ExperimentKind::Mmtc, [=] { return mmtc_task(spec, seed); }});
    if (includes(p.kind, ExperimentKind::Tic))
      tasks.push_back({"tic" + tag, ExperimentKind::Tic, [=] { return tic_task(spec, doc, seed); }});
    if (includes(p.kind, ExperimentKind::Ptr))
      tasks.push_back({"ptr" + tag, ExperimentKind::Ptr, [=] { return ptr_task(doc, seed); }});
  }
  return tasks;
}

struct TaskResult {
  std::optional<TaskOutput> output;
  std::string error;
};

std::vector<TaskResult> execute(const std::vector<Task>& tasks, std::size_t parallelism) {
  std::vector<TaskResult> results(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        results[i].output = tasks[i].run();
      } catch (const std::exception& e) {
        results[i].error = e.what();
      }
    }
  };
  const std::size_t n = std::min(parallelism, tasks.size());
  std::vector<std::jthread> pool;
  for (std::size_t i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  return results;
}

std::string iso_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

using Outputs = std::vector<std::pair<const Task*, const TaskOutput*>>;

Outputs of_kind(const std::vector<Task>& tasks, const std::vector<TaskResult>& results, ExperimentKind k) {
  Outputs out;
  for (std::size_t i = 0; i < tasks.size(); ++i)
    if (tasks[i].kind == k && results[i].output) out.emplace_back(&tasks[i], &*results[i].output);
  return out;
}

std::string ci_cell(const MeanCi& c, int precision = 4) {
  return num(c.mean, precision) + " [" + num(c.low, precision) + ", " + num(c.high, precision) + "]";
}

void throughput_artifacts(const ResolvedPlan& p, const Outputs& outs, std::map<std::string, std::string>& files,
                          std::ostringstream& md) {
  std::string rows = csv_line({"size", "seed", "scenario", "priority", "backend_id", "throughput_cov", "loss_rate",
                               "hit_rate", "mean_latency_ms"});
  std::map<std::pair<std::string, std::string>, std::vector<double>> covs;
  for (const auto& [task, out] : outs) {
    const json& m = out->report.metrics;
    rows += csv_line({m["size"], std::to_string(out->report.seed), m["scenario"], m["priority"], m["backend_id"],
                      fmt_opt(m["throughput_cov"]), num(m["loss_rate"].get<double>()), num(m["hit_rate"].get<double>()),
                      num(m["mean_latency_ms"].get<double>())});
    if (m["throughput_cov"].is_number())
      covs[{m["size"].get<std::string>(), m["scenario"].get<std::string>()}].push_back(m["throughput_cov"].get<double>());
  }
  files["metrics/throughput.csv"] = rows;

  std::string summary = csv_line({"size", "scenario", "runs", "mean_cov", "ci_low", "ci_high", "cov_reduction"});
  md << "## Throughput stability\n\n| size | base CoV (95% CI) | high-density CoV (95% CI) | CoV reduction |\n"
     << "| --- | --- | --- | --- |\n";
  std::vector<std::string> categories;
  BarSeries base{"base (random weights)", {}, {}, {}}, hd{"high-density (prioritized)", {}, {}, {}};
  for (SizeClass size : p.sizes) {
    const std::string sz(to_string(size));
    const MeanCi b = mean_ci95(covs[{sz, "base"}]);
    const MeanCi h = mean_ci95(covs[{sz, "high-density"}]);
    const std::string reduction = (b.n && h.n && b.mean > 0) ? num(1.0 - h.mean / b.mean, 4) : "nan";
    summary += csv_line({sz, "base", std::to_string(b.n), num(b.mean), num(b.low), num(b.high), ""});
    summary += csv_line({sz, "high-density", std::to_string(h.n), num(h.mean), num(h.low), num(h.high), reduction});
    md << "| " << sz << " | " << ci_cell(b) << " | " << ci_cell(h) << " | " << reduction << " |\n";
    categories.push_back(sz);
    base.values.push_back(b.mean);
    base.low.push_back(b.low);
    base.high.push_back(b.high);
    hd.values.push_back(h.mean);
    hd.low.push_back(h.low);
    hd.high.push_back(h.high);
  }
  md << "\n";
  files["metrics/throughput_summary.csv"] = summary;
  files["plots/throughput_cov.svg"] = bar_chart_svg("Throughput CoV by topology", "CoV of per-slot throughput",
                                                     categories, {base, hd});
}

void sync_artifacts(const Outputs& outs, std::map<std::string, std::string>& files, std::ostringstream& md) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::vector<double>>> acc, reads;  // strategy -> round -> samples
  for (const auto& [task, out] : outs) {
    files["metrics/sync_seed" + std::to_string(out->report.seed) + ".csv"] = to_csv(out->report);
    for (const auto& s : out->report.config["strategies"]) {
      const std::string name = s.get<std::string>();
      if (std::find(order.begin(), order.end(), name) == order.end()) order.push_back(name);
      const json& m = out->report.metrics[name];
      const auto a = m["accuracy"].get<std::vector<double>>();
      const auto r = m["reads_per_round"].get<std::vector<double>>();
      auto& A = acc[name];
      auto& R = reads[name];
      if (A.size() < a.size()) A.resize(a.size());
      if (R.size() < r.size()) R.resize(r.size());
      for (std::size_t i = 0; i < a.size(); ++i) A[i].push_back(a[i]);
      for (std::size_t i = 0; i < r.size(); ++i) R[i].push_back(r[i]);
    }
  }
  std::string summary = csv_line({"round", "strategy", "runs", "mean_accuracy", "ci_low", "ci_high", "mean_realtime_reads"});
  std::vector<LineSeries> lines;
  md << "## Right-time synchronization\n\n| strategy | final accuracy (95% CI) | realtime reads per round |\n"
     << "| --- | --- | --- |\n";
  for (const auto& name : order) {
    LineSeries line{name, {}, {}};
    MeanCi last;
    double last_reads = 0;
    for (std::size_t i = 0; i < acc[name].size(); ++i) {
      const MeanCi c = mean_ci95(acc[name][i]);
      const MeanCi r = mean_ci95(reads[name][i]);
      summary += csv_line({std::to_string(i + 1), name, std::to_string(c.n), num(c.mean), num(c.low), num(c.high),
                           num(r.mean, 2)});
      line.x.push_back(double(i + 1));
      line.y.push_back(c.mean);
      last = c;
      last_reads = r.mean;
    }
    md << "| " << name << " | " << ci_cell(last) << " | " << num(last_reads, 1) << " |\n";
    lines.push_back(std::move(line));
  }
  md << "\n";
  files["metrics/sync_summary.csv"] = summary;
  files["plots/sync_accuracy.svg"] = line_chart_svg("Twin accuracy per twinning round", "round", "accuracy", lines, 0, 1);
}

void mmtc_artifacts(const Outputs& outs, std::map<std::string, std::string>& files, std::ostringstream& md) {
  std::map<double, std::vector<double>> hit, cov, loss;
  for (const auto& [task, out] : outs) {
    files["metrics/mmtc_seed" + std::to_string(out->report.seed) + ".csv"] = to_csv(out->report);
    for (const auto& l : out->report.metrics["levels"]) {
      const double f = l["ul_fraction"].get<double>();
      hit[f].push_back(l["hit_rate"].get<double>());
      loss[f].push_back(l["loss_rate"].get<double>());
      if (l["throughput_cov"].is_number()) cov[f].push_back(l["throughput_cov"].get<double>());
    }
  }
  std::string summary = csv_line({"ul_fraction", "runs", "mean_hit_rate", "ci_low", "ci_high", "mean_loss_rate", "mean_cov"});
  md << "## mMTC load sweep\n\n| UL fraction | deadline hit rate (95% CI) | loss rate | throughput CoV |\n"
     << "| --- | --- | --- | --- |\n";
  std::vector<std::string> categories;
  BarSeries bars{"deadline hit rate", {}, {}, {}};
  for (const auto& [f, hs] : hit) {
    const MeanCi h = mean_ci95(hs), l = mean_ci95(loss[f]), c = mean_ci95(cov[f]);
    summary += csv_line({num(f, 2), std::to_string(h.n), num(h.mean), num(h.low), num(h.high), num(l.mean),
                         c.n ? num(c.mean) : "nan"});
    md << "| " << num(f, 2) << " | " << ci_cell(h) << " | " << num(l.mean, 4) << " | "
       << (c.n ? num(c.mean, 4) : "nan") << " |\n";
    categories.push_back(num(f, 2));
    bars.values.push_back(h.mean);
    bars.low.push_back(h.low);
    bars.high.push_back(h.high);
  }
  md << "\n";
  files["metrics/mmtc_summary.csv"] = summary;
  files["plots/mmtc_hit_rate.svg"] = bar_chart_svg("Deadline hit rate by UL load", "hit rate", categories, {bars});
}

void tic_artifacts(const Outputs& outs, std::map<std::string, std::string>& files, std::ostringstream& md) {
  std::string summary = csv_line({"seed", "policy_loss_mean", "fifo_loss_mean", "wins", "eval_seeds", "flags"});
  md << "## TIC scheduling\n\n| seed | policy loss | FIFO loss | wins |\n| --- | --- | --- | --- |\n";
  for (const auto& [task, out] : outs) {
    const ServiceReport& r = out->report;
    files["metrics/tic_seed" + std::to_string(r.seed) + ".csv"] = to_csv(r);
    std::string flags;
    for (const auto& f : r.flags) flags += (flags.empty() ? "" : ";") + f;
    summary += csv_line({std::to_string(r.seed), num(r.metrics["policy_loss_mean"].get<double>()),
                         num(r.metrics["fifo_loss_mean"].get<double>()), r.metrics["wins"].dump(),
                         r.metrics["eval_seeds"].dump(), flags});
    md << "| " << r.seed << " | " << num(r.metrics["policy_loss_mean"].get<double>(), 4) << " | "
       << num(r.metrics["fifo_loss_mean"].get<double>(), 4) << " | " << r.metrics["wins"].dump() << "/"
       << r.metrics["eval_seeds"].dump() << " |\n";
  }
  md << "\n";
  files["metrics/tic_summary.csv"] = summary;
}

void ptr_artifacts(const Outputs& outs, std::map<std::string, std::string>& files, std::ostringstream& md) {
  std::string summary = csv_line({"seed", "selected", "trips", "route_length_km", "missed_bins", "missed_rate"});
  md << "## Planned truck routing\n\n| seed | selected bins | route length (km) | missed rate |\n"
     << "| --- | --- | --- | --- |\n";
  for (const auto& [task, out] : outs) {
    const ServiceReport& r = out->report;
    files["metrics/ptr_seed" + std::to_string(r.seed) + ".csv"] = to_csv(r);
    summary += csv_line({std::to_string(r.seed), r.metrics["selected"].dump(), r.metrics["trips"].dump(),
                         num(r.metrics["route_length_km"].get<double>()), r.metrics["missed_bins"].dump(),
                         num(r.metrics["missed_rate"].get<double>())});
    md << "| " << r.seed << " | " << r.metrics["selected"].dump() << " | "
       << num(r.metrics["route_length_km"].get<double>(), 3) << " | " << num(r.metrics["missed_rate"].get<double>(), 4)
       << " |\n";
  }
  md << "\n";
  files["metrics/ptr_summary.csv"] = summary;
}

std::string report_name(const Task& t) {
  std::string s = t.id;
  std::replace(s.begin(), s.end(), '/', '_');
  return "reports/" + s + ".json";
}

// Files a previous run left behind; an unmanaged non-empty directory is refused.
std::vector<fs::path> previous_artifacts(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::exists(dir)) return out;
  if (!fs::is_directory(dir)) throw Error(ErrorCode::ConfigError, dir.string() + " is not a directory");
  if (fs::is_empty(dir)) return out;
  const fs::path manifest = dir / "manifest.json";
  if (!fs::exists(manifest))
    throw Error(ErrorCode::ConfigError, dir.string() + " is not empty and holds no manifest.json");
  try {
    std::ifstream in(manifest);
    const json m = json::parse(in);
    for (const auto& f : m.at("files")) out.push_back(dir / f.at("path").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, "unreadable manifest in " + dir.string() + ": " + e.what());
  }
  out.push_back(manifest);
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path.string());
  out << content;
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentPlan& plan) {
  ExperimentOutcome outcome;
  const std::string started = iso_now();
  ResolvedPlan p;
  std::vector<fs::path> stale;
  try {
    p = resolve_plan(plan);
    stale = previous_artifacts(plan.out_dir);
  } catch (const Error& e) {
    outcome.exit_code = 2;
    outcome.diagnostics = e.what();
    return outcome;
  }
  outcome.config_hash = p.config_hash;

  const std::vector<Task> tasks = build_tasks(p);
  const std::vector<TaskResult> results = execute(tasks, p.parallelism);

  std::map<std::string, std::string> files;
  std::vector<TwinGraph> snapshots;
  json runs = json::array();
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    RunRecord rec{tasks[i].id, results[i].output.has_value(), results[i].error};
    runs.push_back({{"id", rec.id}, {"ok", rec.ok}, {"error", rec.error}});
    if (!rec.ok) outcome.diagnostics += rec.id + ": " + rec.error + "\n";
    outcome.runs.push_back(std::move(rec));
    if (!results[i].output) continue;
    const TaskOutput& out = *results[i].output;
    json report = to_json(out.report);
    report["run_id"] = tasks[i].id;
    files[report_name(tasks[i])] = report.dump(2) + "\n";
    for (const auto& [path, content] : out.files) files[path] = content;
    if (out.snapshot) snapshots.push_back(*out.snapshot);
  }
  const bool any_failed =
      std::any_of(outcome.runs.begin(), outcome.runs.end(), [](const RunRecord& r) { return !r.ok; });

  std::ostringstream md;
  md << "# twinforge experiment\n\n";
  md << "- experiment: " << to_string(p.kind) << "\n- seeds: " << p.seeds.size() << " (" << p.seeds.front() << ".."
     << p.seeds.back() << ")\n- config hash: " << p.config_hash << "\n- runs: " << tasks.size()
     << (any_failed ? " (some failed, see manifest.json)" : "") << "\n\n";
  if (includes(p.kind, ExperimentKind::Throughput))
    throughput_artifacts(p, of_kind(tasks, results, ExperimentKind::Throughput), files, md);
  if (includes(p.kind, ExperimentKind::Sync)) sync_artifacts(of_kind(tasks, results, ExperimentKind::Sync), files, md);
  if (includes(p.kind, ExperimentKind::Mmtc)) mmtc_artifacts(of_kind(tasks, results, ExperimentKind::Mmtc), files, md);
  if (includes(p.kind, ExperimentKind::Tic)) tic_artifacts(of_kind(tasks, results, ExperimentKind::Tic), files, md);
  if (includes(p.kind, ExperimentKind::Ptr)) ptr_artifacts(of_kind(tasks, results, ExperimentKind::Ptr), files, md);
  files["summary.md"] = md.str();

  // Snapshots are restamped in run order so the file loads as a history store.
  std::string history;
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    snapshots[i].timestamp = static_cast<Timestamp>(i + 1) * 1000;
    history += to_json(snapshots[i]).dump() + "\n";
  }
  files["history.jsonl"] = history;

  try {
    for (const auto& f : stale) fs::remove(f);
    json listed = json::array();
    for (const auto& [path, content] : files) {
      write_file(plan.out_dir / path, content);
      listed.push_back({{"path", path},
                        {"bytes", content.size()},
                        {"sha256", sha256_hex(content)},
                        {"config_hash", p.config_hash}});
      outcome.files.push_back(path);
    }
    json sizes = json::array();
    for (SizeClass s : p.sizes) sizes.push_back(to_string(s));
    const json manifest = {{"tool", "twinforge"},
                           {"config_hash", p.config_hash},
                           {"experiment", to_string(p.kind)},
                           {"seeds", p.seeds},
                           {"sizes", sizes},
                           {"parallelism", p.parallelism},
                           {"spec", p.document},
                           {"started_at", started},
                           {"finished_at", iso_now()},
                           {"status", any_failed ? "partial" : "ok"},
                           {"runs", runs},
                           {"files", listed}};
    write_file(plan.out_dir / "manifest.json", manifest.dump(2) + "\n");
    outcome.files.push_back("manifest.json");
  } catch (const std::exception& e) {
    outcome.exit_code = 3;
    outcome.diagnostics += std::string("writing artifacts: ") + e.what() + "\n";
    return outcome;
  }
  outcome.exit_code = any_failed ? 1 : 0;
  return outcome;
}

}  // namespace twinforge
