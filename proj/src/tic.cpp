#include <algorithm>
#include <numeric>

#include "twinforge/error.hpp"
#include "twinforge/format.hpp"
#include "twinforge/services.hpp"

namespace twinforge {

TicParams tic_params_from_json(const nlohmann::json& j) {
  TicParams p;
  if (j.is_null()) return p;
  try {
    p.learning_rate = j.value("learning_rate", p.learning_rate);
    p.discount = j.value("discount", p.discount);
    p.epsilon = j.value("epsilon", p.epsilon);
    p.episodes = j.value("episodes", p.episodes);
    p.eval_seeds = j.value("eval_seeds", p.eval_seeds);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("tic section: ") + e.what());
  }
  if (!(p.epsilon >= 0 && p.epsilon <= 1)) throw Error(ErrorCode::ConfigError, "tic epsilon outside [0,1]");
  if (!(p.learning_rate > 0 && p.learning_rate <= 1)) throw Error(ErrorCode::ConfigError, "tic learning_rate outside (0,1]");
  if (!(p.discount >= 0 && p.discount < 1)) throw Error(ErrorCode::ConfigError, "tic discount outside [0,1)");
  return p;
}

TicPolicy::TicPolicy(TicParams params, std::uint64_t seed, bool learning)
    : params_(params), rng_(seed), learning_(learning) {}

void TicPolicy::begin_episode(std::size_t n_gateways) {
  pending_.assign(n_gateways, Pending{});
  episode_return_ = 0;
}

TicPolicy::State TicPolicy::observe(const GatewayView& view) {
  const auto& q = view.queue;
  State s{0, 3, 0};
  s.occupancy = std::min<std::size_t>(4, q.size() * 5 / view.config.buffer_capacity);
  if (q.empty()) return s;
  std::int64_t slack = INT64_MAX;
  const Packet* oldest = &q.front();
  for (const auto& p : q) {
    slack = std::min(slack, std::max<std::int64_t>(0, p.deadline - view.now));
    if (p.seq < oldest->seq) oldest = &p;
  }
  s.slack = slack == 0 ? 0 : slack == 1 ? 1 : slack <= 3 ? 2 : 3;
  s.direction = oldest->direction == Direction::UL ? 0 : 1;
  return s;
}

std::vector<std::size_t> TicPolicy::order_for(TicAction a, const std::vector<Packet>& q) {
  std::vector<std::size_t> order(q.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  switch (a) {
    case TicAction::ServeOldest:
      std::sort(order.begin(), order.end(), [&](auto x, auto y) { return q[x].seq < q[y].seq; });
      break;
    case TicAction::ServeMostUrgent:
      std::sort(order.begin(), order.end(), [&](auto x, auto y) {
        return q[x].deadline != q[y].deadline ? q[x].deadline < q[y].deadline : q[x].seq < q[y].seq;
      });
      break;
    case TicAction::ServeShortest:
      std::sort(order.begin(), order.end(), [&](auto x, auto y) {
        return q[x].size != q[y].size ? q[x].size < q[y].size : q[x].seq < q[y].seq;
      });
      break;
    case TicAction::Idle: order.clear(); break;
  }
  return order;
}

TicAction TicPolicy::greedy(const State& s) const {
  const auto& row = q_[s.occupancy][s.slack][s.direction];
  return static_cast<TicAction>(std::max_element(row.begin(), row.end()) - row.begin());
}

void TicPolicy::settle(std::size_t gateway, const State* next) {
  Pending& p = pending_[gateway];
  if (!p.active) return;
  double target = p.reward;
  if (next) {
    const auto& row = q_[next->occupancy][next->slack][next->direction];
    target += params_.discount * *std::max_element(row.begin(), row.end());
  }
  double& q = q_[p.state.occupancy][p.state.slack][p.state.direction][p.action];
  q += params_.learning_rate * (target - q);
  p.active = false;
}

std::vector<std::size_t> TicPolicy::select(const GatewayView& view) {
  if (pending_.size() <= view.gateway) pending_.resize(view.gateway + 1);
  const State s = observe(view);
  std::size_t action;
  if (learning_) {
    settle(view.gateway, &s);
    action = rng_.bernoulli(params_.epsilon) ? static_cast<std::size_t>(rng_.index(kTicActions))
                                             : static_cast<std::size_t>(greedy(s));
    pending_[view.gateway] = Pending{true, s, action, 0.0};
  } else {
    action = static_cast<std::size_t>(greedy(s));
  }
  return order_for(static_cast<TicAction>(action), view.queue);
}

void TicPolicy::feedback(std::size_t gateway, const SlotFeedback& fb) {
  const double r = static_cast<double>(fb.delivered) - static_cast<double>(fb.dropped);
  episode_return_ += r;
  if (!learning_) return;
  if (pending_.size() <= gateway) pending_.resize(gateway + 1);
  if (pending_[gateway].active) pending_[gateway].reward += r;
  if (fb.terminal) settle(gateway, nullptr);
}

TicResult tic_train_and_evaluate(const ScenarioSpec& spec, const TicParams& params) {
  const SimConfig base = build_topology(spec.size_class, spec.sim, spec.seed);
  TicResult out;
  TicPolicy policy(params, mix_seed(spec.seed, 77), true);
  for (std::size_t ep = 0; ep < params.episodes; ++ep) {
    SimConfig c = base;
    c.seed = mix_seed(spec.seed, 1000 + ep);
    policy.begin_episode(c.n_gateways);
    run_sim(c, policy);
    out.training_returns.push_back(policy.episode_return());
  }
  out.trained = params.episodes > 0;
  policy.set_learning(false);
  for (std::size_t i = 0; i < params.eval_seeds; ++i) {
    SimConfig c = base;
    c.seed = mix_seed(spec.seed, 900000 + i);  // disjoint from the training streams
    policy.begin_episode(c.n_gateways);
    const double lp = run_sim(c, policy).loss_rate();
    FifoPolicy fifo;
    const double lf = run_sim(c, fifo).loss_rate();
    out.policy_loss.push_back(lp);
    out.fifo_loss.push_back(lf);
    out.wins += lp <= lf ? 1 : 0;
  }
  return out;
}

ServiceReport run_tic(const ScenarioSpec& spec, std::size_t training_episodes) {
  if (spec.service != ServiceId::Tic) throw Error(ErrorCode::InvalidConfig, "run_tic needs service tic");
  TicParams params = tic_params_from_json(spec.services.value("tic", nlohmann::json::object()));
  params.episodes = training_episodes;
  const TicResult res = tic_train_and_evaluate(spec, params);

  ServiceReport r;
  r.service = "tic";
  r.seed = spec.seed;
  r.config = to_json(spec);
  r.config["tic_effective"] = {{"episodes", params.episodes},
                               {"learning_rate", params.learning_rate},
                               {"discount", params.discount},
                               {"epsilon", params.epsilon},
                               {"eval_seeds", params.eval_seeds}};
  if (!res.trained) r.flags.push_back("untrained");
  auto mean = [](const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  r.metrics["policy_loss_mean"] = mean(res.policy_loss);
  r.metrics["fifo_loss_mean"] = mean(res.fifo_loss);
  r.metrics["wins"] = res.wins;
  r.metrics["eval_seeds"] = res.policy_loss.size();
  r.metrics["policy_loss"] = res.policy_loss;
  r.metrics["fifo_loss"] = res.fifo_loss;
  if (!res.training_returns.empty()) r.metrics["final_training_return"] = res.training_returns.back();
  r.csv_header = {"eval_seed", "policy_loss", "fifo_loss"};
  for (std::size_t i = 0; i < res.policy_loss.size(); ++i)
    r.csv_rows.push_back({std::to_string(i), num(res.policy_loss[i]), num(res.fifo_loss[i])});
  return r;
}

}  // namespace twinforge
