#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "counterpol/envs.hpp"
#include "counterpol/policy.hpp"

namespace counterpol {

/// Scalar-output tanh network used as the state-value baseline.
struct ValueArch {
  std::size_t obs_dim = 0;
  std::vector<std::size_t> hidden_sizes{64, 64};

  std::size_t param_count() const;
  bool operator==(const ValueArch&) const = default;
};

struct ValueParams {
  ValueArch arch;
  std::vector<double> theta;
};

/// Same fan-in scheme as the policy, output layer at unit gain.
ValueParams init_value_params(const ValueArch& arch, std::uint64_t seed);
double value_forward(const ValueParams& vparams, std::span<const double> obs);
GradVector grad_value(const ValueParams& vparams, std::span<const double> obs);

struct TrainerConfig {
  int total_updates = 300;
  int n_episodes_per_update = 10;
  double eta_policy = 1e-3;
  double eta_value = 1e-3;
  double gamma = 0.99;
  /// Rolling-mean return levels (ascending) at which to snapshot the policy.
  std::vector<double> checkpoint_levels;
  /// Stop once every level has been snapshotted.
  bool stop_after_last_level = true;
  /// Standardize advantages per batch (mean 0, std 1) before the policy step.
  bool normalize_advantages = false;
  int rolling_window = 20;
  int eval_episodes = 100;
  std::vector<std::size_t> hidden_sizes{64, 64};
  std::uint64_t seed = 0;

  void validate() const;
  static TrainerConfig defaults_for(EnvId id);
};

struct TrainedCheckpoint {
  PolicyParams params;
  double achieved_j = 0.0;         // undiscounted mean over eval_episodes
  std::optional<double> level;     // unset for the final policy
  int update_index = 0;
  double rolling_mean = 0.0;
};

struct TrainingReport {
  std::vector<TrainedCheckpoint> checkpoints;  // level snapshots, then the final policy
  std::vector<std::string> warnings;
  int updates_run = 0;
};

/// Monte-Carlo advantage policy gradient (reward-to-go minus a learned value
/// baseline) with Adam on both networks.
TrainingReport train_baseline(const Environment& env, const TrainerConfig& cfg);

}  // namespace counterpol
