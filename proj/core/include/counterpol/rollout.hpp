#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <vector>

#include "counterpol/envs.hpp"
#include "counterpol/policy.hpp"

namespace counterpol {

struct StepRecord {
  Observation obs;
  Action action;  // as sampled, before any clipping by the environment
  double reward = 0.0;
  double log_prob = 0.0;
};

struct Trajectory {
  std::vector<StepRecord> steps;
  std::uint64_t seed = 0;
  bool terminated = false;

  std::size_t length() const { return steps.size(); }
};

struct Batch {
  std::vector<Trajectory> trajectories;
  double gamma = 0.99;

  std::size_t total_steps() const;
};

/// Samples n complete on-policy episodes; episode i uses seed base_seed + i
/// for both its reset and its action stream.
Batch sample_episodes(const Environment& env, const PolicyParams& params, std::size_t n,
                      std::uint64_t base_seed, double gamma);

Trajectory sample_episode(const Environment& env, const PolicyParams& params,
                          std::uint64_t seed);

double discounted_return(const Trajectory& traj, double gamma);

/// Sum_{j >= t} gamma^(j-t) r_j. Throws std::out_of_range for t >= T.
double reward_to_go(const Trajectory& traj, std::size_t t, double gamma);

/// All reward-to-go values of a trajectory, by backward recursion.
std::vector<double> rewards_to_go(const Trajectory& traj, double gamma);

/// Mean discounted return over the batch, summed in episode order.
double estimate_performance(const Batch& batch);

/// Average of KL(pi_pivot(.|s) || pi_params(.|s)) over every visited state.
double estimate_kl(const PolicyParams& pivot, const PolicyParams& params, const Batch& batch);

struct ReturnStats {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

/// Mean/std of per-episode discounted returns.
ReturnStats return_stats(const Batch& batch);

/// Undiscounted return statistics over `episodes` fresh episodes seeded
/// seed, seed+1, ...
ReturnStats evaluate_policy(const Environment& env, const PolicyParams& params,
                            std::size_t episodes, std::uint64_t seed);

/// CSV with columns episode,t,obs_0..obs_{d-1},action,reward,log_prob.
/// Multi-dimensional continuous actions get action_0..action_{k-1}.
void write_trace_csv(std::ostream& out, const Batch& batch);

}  // namespace counterpol
