#include "counterpol/counterpol.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace counterpol {

namespace {

void require_same_arch(const PolicyParams& a, const PolicyParams& b, const char* what) {
  if (!(a.arch == b.arch) || a.theta.size() != b.theta.size()) {
    throw std::invalid_argument(std::string(what) + ": architecture mismatch");
  }
}

void scale(GradVector& g, double s) {
  for (auto& v : g) v *= s;
}

double l2_norm(const GradVector& g) {
  double ss = 0.0;
  for (double v : g) ss += v * v;
  return std::sqrt(ss);
}

bool all_finite(const GradVector& g) {
  return std::all_of(g.begin(), g.end(), [](double v) { return std::isfinite(v); });
}

Batch sample_step_batch(const Environment& env, const PolicyParams& params, int n_episodes,
                        std::uint64_t seed, std::uint64_t step, double gamma) {
  return sample_episodes(env, params, static_cast<std::size_t>(n_episodes),
                         derive_seed(seed, step), gamma);
}

}  // namespace

void CounterpolConfig::validate() const {
  if (!std::isfinite(r_target)) throw std::invalid_argument("r_target must be finite");
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  if (!(k >= 0.0)) throw std::invalid_argument("k must be non-negative");
  if (m < 1) throw std::invalid_argument("m must be positive");
  if (n_episodes < 1) throw std::invalid_argument("n_episodes must be positive");
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0, 1]");
  if (max_outer_iters < 1) throw std::invalid_argument("max_outer_iters must be positive");
}

CounterpolConfig CounterpolConfig::defaults_for(EnvId id) {
  CounterpolConfig cfg;
  switch (id) {
    case EnvId::kCartPole:
      cfg.delta = 10.0;
      cfg.k = 10.0;
      cfg.eta = 3e-3;
      break;
    case EnvId::kAcrobot:
      cfg.delta = 2.5;
      cfg.k = 1.0;
      cfg.eta = 3e-3;
      break;
    case EnvId::kPendulum:
      cfg.delta = 37.5;
      // With k = 1e5 the KL term's curvature bounds a stable fixed step to
      // about 1e-5; larger steps blow up within a few updates.
      cfg.k = 1e5;
      cfg.eta = 1e-6;
      break;
  }
  return cfg;
}

std::string_view to_string(RunStatus status) {
  switch (status) {
    case RunStatus::kConverged:
      return "converged";
    case RunStatus::kMaxItersExceeded:
      return "max_iters_exceeded";
    case RunStatus::kNonFiniteGradient:
      return "non_finite_gradient";
  }
  return "unknown";
}

GradVector policy_gradient_estimate(const PolicyParams& params, const Batch& batch) {
  GradVector grad(params.theta.size(), 0.0);
  PolicyEvaluator eval(params);
  for (const auto& traj : batch.trajectories) {
    const auto rtg = rewards_to_go(traj, batch.gamma);
    for (std::size_t t = 0; t < traj.length(); ++t) {
      if (rtg[t] == 0.0) continue;
      eval.evaluate(traj.steps[t].obs);
      eval.add_log_prob_direction(traj.steps[t].action, rtg[t]);
      eval.backpropagate(grad);
    }
  }
  scale(grad, 1.0 / static_cast<double>(batch.total_steps()));
  return grad;
}

GradVector return_penalty_grad(const PolicyParams& params, const Batch& batch, double r_target) {
  const int s = sgn(estimate_performance(batch) - r_target);
  if (s == 0) return GradVector(params.theta.size(), 0.0);
  GradVector grad = policy_gradient_estimate(params, batch);
  if (s < 0) scale(grad, -1.0);
  return grad;
}

GradVector kl_gradient_estimate(const PolicyParams& pivot, const PolicyParams& params,
                                const Batch& batch) {
  require_same_arch(pivot, params, "kl_gradient_estimate");
  GradVector grad(params.theta.size(), 0.0);
  PolicyEvaluator pivot_eval(pivot);
  PolicyEvaluator eval(params);
  for (const auto& traj : batch.trajectories) {
    for (const auto& step : traj.steps) {
      const auto& pivot_dist = pivot_eval.evaluate(step.obs);
      eval.evaluate(step.obs);
      eval.add_kl_direction(pivot_dist, 1.0);
      eval.backpropagate(grad);
    }
  }
  scale(grad, 1.0 / static_cast<double>(batch.total_steps()));
  return grad;
}

ObjectiveGradient counterfactual_objective_gradient(const PolicyParams& pivot,
                                                    const PolicyParams& params,
                                                    const Batch& batch, double r_target,
                                                    double k) {
  require_same_arch(pivot, params, "counterfactual_objective_gradient");
  ObjectiveGradient out;
  out.grad.assign(params.theta.size(), 0.0);
  out.j_estimate = estimate_performance(batch);
  const int s = sgn(out.j_estimate - r_target);

  PolicyEvaluator pivot_eval(pivot);
  PolicyEvaluator eval(params);
  double kl_sum = 0.0;
  for (const auto& traj : batch.trajectories) {
    const auto rtg = rewards_to_go(traj, batch.gamma);
    for (std::size_t t = 0; t < traj.length(); ++t) {
      const auto& step = traj.steps[t];
      const auto& pivot_dist = pivot_eval.evaluate(step.obs);
      const auto& dist = eval.evaluate(step.obs);
      kl_sum += kl_divergence(pivot_dist, dist);
      if (s != 0) eval.add_log_prob_direction(step.action, s * rtg[t]);
      eval.add_kl_direction(pivot_dist, k);
      eval.backpropagate(out.grad);
    }
  }
  const double inv_steps = 1.0 / static_cast<double>(batch.total_steps());
  scale(out.grad, inv_steps);
  out.kl_estimate = kl_sum * inv_steps;
  return out;
}

CounterpolResult counterpol_optimize(const PolicyParams& pivot0, const Environment& env,
                                     const CounterpolConfig& cfg) {
  cfg.validate();
  pivot0.validate();
  if (pivot0.arch.obs_dim != env.spec().obs_dim) {
    throw std::invalid_argument("counterpol_optimize: policy does not match environment");
  }
  const auto started = std::chrono::steady_clock::now();

  CounterpolResult result{pivot0, {}};
  PolicyParams& current = result.policy;
  PolicyParams pivot = pivot0;
  RunLog& log = result.log;

  auto finish = [&](RunStatus status, int outer) {
    log.status = status;
    log.outer_updates = outer;
    log.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  };

  std::uint64_t step = 0;
  for (int i = 0; i < cfg.max_outer_iters; ++i) {
    for (int j = 0; j < cfg.m; ++j) {
      const Batch batch =
          sample_step_batch(env, current, cfg.n_episodes, cfg.seed, step++, cfg.gamma);
      log.episodes += batch.trajectories.size();

      UpdateRecord rec;
      rec.outer_iter = i;
      rec.inner_step = j;
      rec.j_estimate = estimate_performance(batch);
      rec.return_penalty = std::abs(rec.j_estimate - cfg.r_target);

      if (rec.return_penalty < cfg.delta) {
        rec.kl_estimate = estimate_kl(pivot, current, batch);
        log.records.push_back(rec);
        finish(RunStatus::kConverged, i);
        return result;
      }

      const auto obj = counterfactual_objective_gradient(pivot, current, batch, cfg.r_target, cfg.k);
      rec.kl_estimate = obj.kl_estimate;
      rec.grad_norm = l2_norm(obj.grad);
      if (!all_finite(obj.grad) || !std::isfinite(rec.j_estimate)) {
        log.records.push_back(rec);
        finish(RunStatus::kNonFiniteGradient, i);
        return result;
      }
      for (std::size_t p = 0; p < current.theta.size(); ++p) {
        current.theta[p] -= cfg.eta * obj.grad[p];
      }
      ++log.inner_updates;
      rec.pivot_updated = (j + 1 == cfg.m);
      log.records.push_back(rec);
    }
    pivot = current;
  }
  finish(RunStatus::kMaxItersExceeded, cfg.max_outer_iters);
  return result;
}

GradVector trust_region_gradient(const PolicyParams& pivot, const PolicyParams& params,
                                 const Batch& batch, double lambda) {
  GradVector grad = policy_gradient_estimate(params, batch);
  if (lambda == 0.0) return grad;
  const GradVector kl = kl_gradient_estimate(pivot, params, batch);
  for (std::size_t p = 0; p < grad.size(); ++p) grad[p] -= lambda * kl[p];
  return grad;
}

PolicyParams trust_region_optimize(const PolicyParams& start, const Environment& env,
                                   const TrustRegionConfig& cfg, int steps) {
  if (cfg.m < 1 || cfg.n_episodes < 1 || !(cfg.lambda >= 0.0)) {
    throw std::invalid_argument("trust_region_optimize: invalid configuration");
  }
  PolicyParams current = start;
  PolicyParams pivot = start;
  for (int s = 0; s < steps; ++s) {
    const Batch batch = sample_step_batch(env, current, cfg.n_episodes, cfg.seed,
                                          static_cast<std::uint64_t>(s), cfg.gamma);
    const GradVector g = trust_region_gradient(pivot, current, batch, cfg.lambda);
    for (std::size_t p = 0; p < current.theta.size(); ++p) current.theta[p] += cfg.eta * g[p];
    if ((s + 1) % cfg.m == 0) pivot = current;
  }
  return current;
}

EquivalenceReport verify_equivalence(const PolicyParams& pivot, const PolicyParams& params,
                                     const Batch& batch, double k, double r_target) {
  EquivalenceReport report;
  report.j_estimate = estimate_performance(batch);
  report.precondition_met = report.j_estimate < r_target;
  if (!report.precondition_met) return report;

  GradVector counterfactual = return_penalty_grad(params, batch, r_target);
  const GradVector kl = kl_gradient_estimate(pivot, params, batch);
  for (std::size_t p = 0; p < counterfactual.size(); ++p) counterfactual[p] += k * kl[p];
  const GradVector trust_region = trust_region_gradient(pivot, params, batch, k);

  for (std::size_t p = 0; p < counterfactual.size(); ++p) {
    report.max_deviation =
        std::max(report.max_deviation, std::abs(counterfactual[p] + trust_region[p]));
  }
  report.equivalent = report.max_deviation < kEquivalenceTolerance;
  return report;
}

}  // namespace counterpol
