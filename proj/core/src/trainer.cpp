#include "counterpol/trainer.hpp"

#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "counterpol/rollout.hpp"
#include "network.hpp"

namespace counterpol {

namespace detail {
MlpShape value_shape(const ValueArch& arch);
}  // namespace detail

namespace {

class Adam {
 public:
  Adam(std::size_t n, double lr) : lr_(lr), m_(n, 0.0), v_(n, 0.0) {}

  /// Descent step on `grad` (pass the negated gradient to ascend).
  void step(std::vector<double>& theta, const std::vector<double>& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grad[i];
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grad[i] * grad[i];
      theta[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + kEps);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  double lr_;
  int t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace

void TrainerConfig::validate() const {
  if (total_updates < 0) throw std::invalid_argument("total_updates must be non-negative");
  if (n_episodes_per_update < 1) throw std::invalid_argument("n_episodes_per_update must be positive");
  if (!(eta_policy > 0.0) || !(eta_value > 0.0)) throw std::invalid_argument("learning rates must be positive");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0, 1]");
  if (rolling_window < 1) throw std::invalid_argument("rolling_window must be positive");
  if (eval_episodes < 1) throw std::invalid_argument("eval_episodes must be positive");
  for (std::size_t i = 1; i < checkpoint_levels.size(); ++i) {
    if (checkpoint_levels[i] < checkpoint_levels[i - 1]) {
      throw std::invalid_argument("checkpoint_levels must be sorted ascending");
    }
  }
}

TrainerConfig TrainerConfig::defaults_for(EnvId id) {
  TrainerConfig cfg;
  switch (id) {
    case EnvId::kCartPole:
      cfg.total_updates = 500;
      cfg.checkpoint_levels = {235.0, 368.0, 500.0};
      break;
    case EnvId::kAcrobot:
      // The rolling mean runs a few points ahead of the evaluated return.
      cfg.total_updates = 500;
      cfg.n_episodes_per_update = 20;
      cfg.eta_policy = 3e-3;
      cfg.eta_value = 3e-3;
      cfg.checkpoint_levels = {-147.0, -85.0, -80.0};
      break;
    case EnvId::kPendulum:
      cfg.total_updates = 2000;
      cfg.eta_policy = 3e-3;
      cfg.eta_value = 3e-3;
      cfg.gamma = 0.95;
      cfg.normalize_advantages = true;
      cfg.checkpoint_levels = {-853.0, -792.0, -568.0};
      break;
  }
  return cfg;
}

TrainingReport train_baseline(const Environment& env, const TrainerConfig& cfg) {
  cfg.validate();
  const PolicyArch arch = default_arch(env.spec(), cfg.hidden_sizes);
  PolicyParams policy = init_params(arch, derive_seed(cfg.seed, 0x9011c7));
  ValueParams value =
      init_value_params({env.spec().obs_dim, cfg.hidden_sizes}, derive_seed(cfg.seed, 0x7a1e));
  const auto vshape = detail::value_shape(value.arch);

  Adam policy_opt(policy.theta.size(), cfg.eta_policy);
  Adam value_opt(value.theta.size(), cfg.eta_value);
  detail::MlpWorkspace vws;

  const std::uint64_t eval_seed = derive_seed(cfg.seed, 0xe7a1);
  auto snapshot = [&](std::optional<double> level, int update, double rolling) {
    TrainedCheckpoint c;
    c.params = policy;
    c.achieved_j =
        evaluate_policy(env, policy, static_cast<std::size_t>(cfg.eval_episodes), eval_seed).mean;
    c.level = level;
    c.update_index = update;
    c.rolling_mean = rolling;
    return c;
  };

  TrainingReport report;
  std::deque<double> recent;
  double rolling = std::nan("");
  std::size_t next_level = 0;

  for (int u = 0; u < cfg.total_updates; ++u) {
    const Batch batch =
        sample_episodes(env, policy, static_cast<std::size_t>(cfg.n_episodes_per_update),
                        derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(u)), cfg.gamma);

    // First pass: value regression and raw advantages.
    GradVector pgrad(policy.theta.size(), 0.0);
    GradVector vgrad(value.theta.size(), 0.0);
    std::vector<double> adv;
    adv.reserve(batch.total_steps());
    for (const auto& traj : batch.trajectories) {
      const auto rtg = rewards_to_go(traj, cfg.gamma);
      for (std::size_t t = 0; t < traj.length(); ++t) {
        const double v = vws.forward(vshape, value.theta, traj.steps[t].obs)[0];
        const double err = v - rtg[t];
        vws.backward(vshape, value.theta, {&err, 1}, 1.0, vgrad);
        adv.push_back(rtg[t] - v);
      }
      recent.push_back(discounted_return(traj, 1.0));
      if (static_cast<int>(recent.size()) > cfg.rolling_window) recent.pop_front();
    }
    if (cfg.normalize_advantages && adv.size() > 1) {
      const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / adv.size();
      double var = 0.0;
      for (double a : adv) var += (a - mean) * (a - mean);
      const double sd = std::sqrt(var / adv.size()) + 1e-8;
      for (double& a : adv) a = (a - mean) / sd;
    }

    PolicyEvaluator eval(policy);
    std::size_t idx = 0;
    for (const auto& traj : batch.trajectories) {
      for (const auto& step : traj.steps) {
        eval.evaluate(step.obs);
        eval.add_log_prob_direction(step.action, -adv[idx++]);  // negated: Adam descends
        eval.backpropagate(pgrad);
      }
    }
    const double inv = 1.0 / static_cast<double>(batch.total_steps());
    for (auto& g : pgrad) g *= inv;
    for (auto& g : vgrad) g *= inv;
    policy_opt.step(policy.theta, pgrad);
    value_opt.step(value.theta, vgrad);
    report.updates_run = u + 1;

    if (static_cast<int>(recent.size()) < cfg.rolling_window) continue;
    rolling = std::accumulate(recent.begin(), recent.end(), 0.0) /
              static_cast<double>(recent.size());
    while (next_level < cfg.checkpoint_levels.size() &&
           rolling >= cfg.checkpoint_levels[next_level]) {
      report.checkpoints.push_back(snapshot(cfg.checkpoint_levels[next_level], u + 1, rolling));
      ++next_level;
    }
    if (cfg.stop_after_last_level && !cfg.checkpoint_levels.empty() &&
        next_level == cfg.checkpoint_levels.size()) {
      break;
    }
  }

  for (std::size_t l = next_level; l < cfg.checkpoint_levels.size(); ++l) {
    std::ostringstream msg;
    msg << "level " << cfg.checkpoint_levels[l] << " not reached within " << report.updates_run
        << " updates";
    report.warnings.push_back(msg.str());
  }
  report.checkpoints.push_back(snapshot(std::nullopt, report.updates_run, rolling));
  return report;
}

}  // namespace counterpol
