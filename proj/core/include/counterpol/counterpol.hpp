#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "counterpol/envs.hpp"
#include "counterpol/policy.hpp"
#include "counterpol/rollout.hpp"

namespace counterpol {

/// Hyperparameters of the counterfactual policy search. `r_target` and
/// `delta` are in the units of the (discounted, with `gamma`) return.
struct CounterpolConfig {
  double r_target = 0.0;
  double delta = 10.0;
  double k = 10.0;           // KL weight
  int m = 10;                // gradient steps per KL pivot
  int n_episodes = 10;       // episodes per gradient step
  double eta = 3e-3;         // fixed step size
  double gamma = 0.99;
  int max_outer_iters = 2000;
  std::uint64_t seed = 0;

  void validate() const;
  static CounterpolConfig defaults_for(EnvId id);
};

struct UpdateRecord {
  int outer_iter = 0;
  int inner_step = 0;
  double j_estimate = 0.0;
  double kl_estimate = 0.0;
  double return_penalty = 0.0;  // |J - r_target|
  double grad_norm = 0.0;       // 0 on the record that stopped the search
  bool pivot_updated = false;
};

enum class RunStatus { kConverged, kMaxItersExceeded, kNonFiniteGradient };

std::string_view to_string(RunStatus status);

struct RunLog {
  std::vector<UpdateRecord> records;
  RunStatus status = RunStatus::kMaxItersExceeded;
  int outer_updates = 0;  // pivot replacements before stopping
  int inner_updates = 0;  // parameter updates applied
  std::size_t episodes = 0;
  double wall_time_s = 0.0;
};

struct CounterpolResult {
  PolicyParams policy;
  RunLog log;
};

inline constexpr int sgn(double x) { return (x > 0.0) - (x < 0.0); }

/// Reward-to-go weighted score function, normalised by the total number of
/// visited states. No baseline is subtracted.
GradVector policy_gradient_estimate(const PolicyParams& params, const Batch& batch);

/// sgn(J_hat - r_target) * policy_gradient_estimate, with sgn(0) = 0.
GradVector return_penalty_grad(const PolicyParams& params, const Batch& batch, double r_target);

/// Per-state gradient of KL(pi_pivot || pi_params) averaged over all visited
/// states; the pivot is held constant.
GradVector kl_gradient_estimate(const PolicyParams& pivot, const PolicyParams& params,
                                const Batch& batch);

struct ObjectiveGradient {
  GradVector grad;
  double j_estimate = 0.0;
  double kl_estimate = 0.0;
};

/// return_penalty_grad + k * kl_gradient_estimate evaluated in a single
/// forward/backward sweep per visited state, together with the performance
/// and KL estimates of the same batch.
ObjectiveGradient counterfactual_objective_gradient(const PolicyParams& pivot,
                                                    const PolicyParams& params,
                                                    const Batch& batch, double r_target,
                                                    double k);

/// Iterative KL-pivoting descent. Every gradient step samples a fresh batch
/// with seeds derived from (cfg.seed, step index); the search stops as soon
/// as a batch estimate lies within delta of the target.
CounterpolResult counterpol_optimize(const PolicyParams& pivot0, const Environment& env,
                                     const CounterpolConfig& cfg);

struct TrustRegionConfig {
  double lambda = 10.0;
  double eta = 3e-3;
  double gamma = 0.99;
  int n_episodes = 10;
  int m = 10;
  std::uint64_t seed = 0;
};

/// Ascent direction of J - lambda * KL(pi_pivot || pi_params).
GradVector trust_region_gradient(const PolicyParams& pivot, const PolicyParams& params,
                                 const Batch& batch, double lambda);

/// Penalised trust-region ascent with the pivot refreshed every cfg.m steps.
/// Uses the same batch seeding as counterpol_optimize, so the two produce the
/// same iterates when the return target is unreachable.
PolicyParams trust_region_optimize(const PolicyParams& start, const Environment& env,
                                   const TrustRegionConfig& cfg, int steps);

struct EquivalenceReport {
  bool precondition_met = false;  // J_hat < r_target on the batch
  bool equivalent = false;
  double max_deviation = 0.0;
  double j_estimate = 0.0;
};

inline constexpr double kEquivalenceTolerance = 1e-12;
inline constexpr double kUnreachableTarget = 1e9;

/// Compares the counterfactual descent direction for an unreachable target
/// with the negated trust-region ascent direction (lambda = k) on one batch.
EquivalenceReport verify_equivalence(const PolicyParams& pivot, const PolicyParams& params,
                                     const Batch& batch, double k,
                                     double r_target = kUnreachableTarget);

}  // namespace counterpol
