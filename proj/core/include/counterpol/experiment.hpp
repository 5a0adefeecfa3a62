#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "counterpol/counterpol.hpp"
#include "counterpol/envs.hpp"
#include "counterpol/trainer.hpp"

namespace counterpol {

/// Per-environment grid used to regenerate the counterfactual results table:
/// three original policies, three return targets, three seeds.
struct Table1Setup {
  EnvId env = EnvId::kCartPole;
  std::vector<double> targets;
  /// Returns of the original policies the grid is modelled on.
  std::vector<double> reference_levels;
  TrainerConfig trainer;
  /// r_target and seed are overwritten per cell. Returns are undiscounted
  /// (gamma = 1) so targets are in plain episode-return units.
  CounterpolConfig counterpol;
  int seeds = 3;
  int eval_episodes = 100;
};

Table1Setup table1_setup(EnvId id);

/// Outcome of one counterfactual run followed by a separate evaluation.
struct CellResult {
  std::string env;
  double j_pi0 = 0.0;
  double r_target = 0.0;
  std::uint64_t seed = 0;
  int n_outer = 0;
  int n_inner = 0;
  double j_cf_eval_mean = 0.0;
  double j_cf_eval_std = 0.0;
  double kl_final = 0.0;  // KL(pi_0 || pi_cf) on the evaluation states
  PolicyParams cf_policy;
  RunLog log;
};

/// Runs counterpol_optimize, then evaluates the result on eval_episodes fresh
/// episodes (seeded from cfg.seed) and measures its KL to the original.
CellResult run_counterfactual(const Environment& env, const PolicyParams& original,
                              double j_original, const CounterpolConfig& cfg,
                              int eval_episodes);

/// Seed of the evaluation batch that run_counterfactual draws.
std::uint64_t evaluation_seed(std::uint64_t run_seed);

struct OriginalPolicy {
  PolicyParams params;
  double j = 0.0;
};

/// Picks the three original policies out of a training report: the level
/// snapshots in order, padded with the final policy when a level was missed.
std::vector<OriginalPolicy> select_originals(const TrainingReport& report, std::size_t count);

using CellCallback = std::function<void(const CellResult&)>;

/// Cells ordered by original policy, then target, then seed. Seeds are
/// base_seed, base_seed + 1, ...
std::vector<CellResult> run_table1_grid(const Table1Setup& setup,
                                        const std::vector<OriginalPolicy>& originals,
                                        std::uint64_t base_seed,
                                        const CellCallback& on_cell = {});

/// Columns: env,J_pi0,R_target,seed,n_outer,n_inner,J_cf_eval_mean,
/// J_cf_eval_std,kl_final.
void write_table1_csv(std::ostream& out, const std::vector<CellResult>& cells);

}  // namespace counterpol
