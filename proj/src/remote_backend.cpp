#include <httplib.h>

#include <cmath>

#include "twinforge/error.hpp"
#include "twinforge/scenario.hpp"

namespace twinforge {

namespace {

constexpr const char* kSystemPrompt =
    "You generate next-state network scenarios. Reply with one JSON object and nothing else. "
    "Keys: predicted_graph, sim_config, weights, priority, provenance. Keep the priority and provenance "
    "given in the context. Weights (rho, d, l, alpha) must sum to 1, each at least w_min, and the two "
    "prioritized weights must each exceed every other weight.";

void set_timeouts(httplib::Client& cli, double seconds) {
  const auto sec = static_cast<time_t>(seconds);
  const auto usec = static_cast<time_t>((seconds - static_cast<double>(sec)) * 1e6);
  cli.set_connection_timeout(sec, usec);
  cli.set_read_timeout(sec, usec);
  cli.set_write_timeout(sec, usec);
}

}  // namespace

GeneratedScenario RemoteBackend::propose(const GenerationContext& ctx) {
  std::lock_guard lock(mutex_);
  if (settings_.url.empty()) throw Error(ErrorCode::BackendFailure, "TWINFORGE_LLM_URL is not set");

  const auto scheme = settings_.url.find("://");
  if (scheme == std::string::npos) throw Error(ErrorCode::BackendFailure, "endpoint URL lacks a scheme");
  const auto slash = settings_.url.find('/', scheme + 3);
  const std::string base = settings_.url.substr(0, slash);
  const std::string path = slash == std::string::npos ? "/" : settings_.url.substr(slash);

  httplib::Client cli(base);
  set_timeouts(cli, settings_.timeout_s);
  httplib::Headers headers;
  if (!settings_.key.empty()) headers.emplace("Authorization", "Bearer " + settings_.key);

  const nlohmann::json request = {
      {"model", settings_.model},
      {"messages",
       {{{"role", "system"}, {"content", kSystemPrompt}}, {{"role", "user"}, {"content", to_json(ctx).dump()}}}},
      {"response_format", "json"}};
  const std::string body = request.dump();

  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= settings_.retries; ++attempt) {
    ++attempts_;
    auto res = cli.Post(path, headers, body, "application/json");
    if (!res) {
      last_error = "transport: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP status " + std::to_string(res->status);
      continue;
    }
    try {
      GeneratedScenario s = parse_backend_reply(res->body);
      s.backend_id = id();
      auto v = validate_scenario(s, ctx.spec.optimizer.w_min);
      if (v.empty()) return s;
      last_error = "invalid scenario: " + v.front();
    } catch (const Error& e) {
      last_error = e.what();
    }
  }
  throw Error(ErrorCode::BackendFailure, "remote backend gave up: " + last_error);
}

}  // namespace twinforge
