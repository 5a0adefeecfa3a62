#include "counterpol/rollout.hpp"

#include <cmath>
#include <stdexcept>

namespace counterpol {

std::size_t Batch::total_steps() const {
  std::size_t n = 0;
  for (const auto& t : trajectories) n += t.length();
  return n;
}

Trajectory sample_episode(const Environment& env, const PolicyParams& params,
                          std::uint64_t seed) {
  if (params.arch.obs_dim != env.spec().obs_dim) {
    throw std::invalid_argument("sample_episodes: policy obs_dim does not match environment");
  }
  PolicyEvaluator eval(params);
  Rng rng = action_stream(seed);

  Trajectory traj;
  traj.seed = seed;
  traj.steps.reserve(static_cast<std::size_t>(env.spec().max_episode_steps));

  auto [state, obs] = env.reset(seed);
  while (!state.finished) {
    const auto& dist = eval.evaluate(obs);
    Action action = sample(dist, rng);
    const double lp = log_prob(dist, action);
    auto next = env.step(state, action);
    traj.steps.push_back({std::move(obs), std::move(action), next.result.reward, lp});
    traj.terminated = next.result.terminated;
    state = std::move(next.state);
    obs = std::move(next.result.observation);
  }
  return traj;
}

Batch sample_episodes(const Environment& env, const PolicyParams& params, std::size_t n,
                      std::uint64_t base_seed, double gamma) {
  if (n == 0) throw std::invalid_argument("sample_episodes: need at least one episode");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0, 1]");
  Batch batch;
  batch.gamma = gamma;
  batch.trajectories.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    batch.trajectories.push_back(sample_episode(env, params, base_seed + i));
  }
  return batch;
}

double discounted_return(const Trajectory& traj, double gamma) {
  return reward_to_go(traj, 0, gamma);
}

double reward_to_go(const Trajectory& traj, std::size_t t, double gamma) {
  if (t >= traj.length()) throw std::out_of_range("reward_to_go: step index out of range");
  double sum = 0.0;
  double discount = 1.0;
  for (std::size_t j = t; j < traj.length(); ++j) {
    sum += discount * traj.steps[j].reward;
    discount *= gamma;
  }
  return sum;
}

std::vector<double> rewards_to_go(const Trajectory& traj, double gamma) {
  std::vector<double> g(traj.length());
  double acc = 0.0;
  for (std::size_t j = traj.length(); j-- > 0;) {
    acc = traj.steps[j].reward + gamma * acc;
    g[j] = acc;
  }
  return g;
}

double estimate_performance(const Batch& batch) {
  if (batch.trajectories.empty()) throw std::invalid_argument("estimate_performance: empty batch");
  double sum = 0.0;
  for (const auto& t : batch.trajectories) sum += discounted_return(t, batch.gamma);
  return sum / static_cast<double>(batch.trajectories.size());
}

ReturnStats return_stats(const Batch& batch) {
  ReturnStats s;
  s.mean = estimate_performance(batch);
  double ss = 0.0;
  for (const auto& t : batch.trajectories) {
    const double d = discounted_return(t, batch.gamma) - s.mean;
    ss += d * d;
  }
  s.std = std::sqrt(ss / static_cast<double>(batch.trajectories.size()));
  return s;
}

ReturnStats evaluate_policy(const Environment& env, const PolicyParams& params,
                            std::size_t episodes, std::uint64_t seed) {
  return return_stats(sample_episodes(env, params, episodes, seed, 1.0));
}

double estimate_kl(const PolicyParams& pivot, const PolicyParams& params, const Batch& batch) {
  if (!(pivot.arch == params.arch)) {
    throw std::invalid_argument("estimate_kl: pivot and params have different architectures");
  }
  PolicyEvaluator pivot_eval(pivot);
  PolicyEvaluator eval(params);
  double sum = 0.0;
  for (const auto& traj : batch.trajectories) {
    for (const auto& step : traj.steps) {
      sum += kl_divergence(pivot_eval.evaluate(step.obs), eval.evaluate(step.obs));
    }
  }
  return sum / static_cast<double>(batch.total_steps());
}

void write_trace_csv(std::ostream& out, const Batch& batch) {
  if (batch.trajectories.empty() || batch.trajectories.front().steps.empty()) return;
  const auto& first = batch.trajectories.front().steps.front();
  const std::size_t obs_dim = first.obs.size();
  const auto* cont = std::get_if<std::vector<double>>(&first.action);
  const std::size_t act_cols = cont ? cont->size() : 1;

  out << "episode,t";
  for (std::size_t i = 0; i < obs_dim; ++i) out << ",obs_" << i;
  if (act_cols == 1) {
    out << ",action";
  } else {
    for (std::size_t i = 0; i < act_cols; ++i) out << ",action_" << i;
  }
  out << ",reward,log_prob\n";

  const auto old_precision = out.precision(17);
  for (std::size_t e = 0; e < batch.trajectories.size(); ++e) {
    const auto& traj = batch.trajectories[e];
    for (std::size_t t = 0; t < traj.length(); ++t) {
      const auto& s = traj.steps[t];
      out << e << ',' << t;
      for (double v : s.obs) out << ',' << v;
      if (const auto* u = std::get_if<std::vector<double>>(&s.action)) {
        for (double v : *u) out << ',' << v;
      } else {
        out << ',' << std::get<std::size_t>(s.action);
      }
      out << ',' << s.reward << ',' << s.log_prob << '\n';
    }
  }
  out.precision(old_precision);
}

}  // namespace counterpol
