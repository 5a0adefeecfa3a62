#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "counterpol/envs.hpp"
#include "counterpol/random.hpp"

namespace counterpol {

struct CategoricalHead {
  std::size_t n_actions = 2;
  bool operator==(const CategoricalHead&) const = default;
};

/// Diagonal Gaussian head. With global_log_std the log standard deviations
/// are free parameters stored after the network weights; otherwise the
/// network emits them next to the mean.
struct GaussianHead {
  std::size_t action_dim = 1;
  bool global_log_std = true;
  bool operator==(const GaussianHead&) const = default;
};

using PolicyHead = std::variant<CategoricalHead, GaussianHead>;

/// Dense tanh network with a categorical or Gaussian output head.
struct PolicyArch {
  std::size_t obs_dim = 0;
  std::vector<std::size_t> hidden_sizes{64, 64};
  PolicyHead head = CategoricalHead{};

  std::size_t network_outputs() const;
  std::size_t network_param_count() const;
  std::size_t param_count() const;
  /// Throws std::invalid_argument when the descriptor is unusable.
  void validate() const;

  bool operator==(const PolicyArch&) const = default;
};

/// Categorical head for discrete spaces, global-log-std Gaussian for boxes.
PolicyArch default_arch(const EnvSpec& spec, std::vector<std::size_t> hidden_sizes = {64, 64});

struct PolicyParams {
  PolicyArch arch;
  std::vector<double> theta;

  /// Length and finiteness check; throws std::invalid_argument.
  void validate() const;
};

using GradVector = std::vector<double>;

struct Categorical {
  std::vector<double> probs;
  std::vector<double> log_probs;
};

struct DiagGaussian {
  std::vector<double> mean;
  std::vector<double> log_std;
  std::vector<double> std;
};

using PolicyDistribution = std::variant<Categorical, DiagGaussian>;

Categorical categorical_from_probs(std::vector<double> probs);
Categorical categorical_from_logits(std::span<const double> logits);
DiagGaussian gaussian_from_std(std::vector<double> mean, std::vector<double> std);

/// Hidden weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); the output layer is
/// additionally scaled by kOutputInitGain so the initial policy is close to
/// uniform (categorical) or zero-mean (Gaussian). Biases and log-std start at 0.
inline constexpr double kOutputInitGain = 0.01;
PolicyParams init_params(const PolicyArch& arch, std::uint64_t seed);

/// Rejects observations of the wrong size or with non-finite entries.
PolicyDistribution forward(const PolicyParams& params, std::span<const double> obs);

/// Gaussian samples are returned unclipped; the environment clips them.
Action sample(const PolicyDistribution& dist, Rng& rng);

double log_prob(const PolicyDistribution& dist, const Action& action);

/// KL(dist0 || dist1), clamped at zero. Mismatched heads throw.
double kl_divergence(const PolicyDistribution& dist0, const PolicyDistribution& dist1);

GradVector grad_log_prob(const PolicyParams& params, std::span<const double> obs,
                         const Action& action);

/// Gradient of KL(pi_pivot(.|obs) || pi_params(.|obs)) with respect to
/// params only.
GradVector grad_kl(const PolicyParams& pivot, const PolicyParams& params,
                   std::span<const double> obs);

/// Incremental evaluator: one forward pass per state, any weighted mix of
/// log-probability and KL directions, then one backward pass. The batch
/// estimators are built on it.
class PolicyEvaluator {
 public:
  explicit PolicyEvaluator(const PolicyParams& params);
  ~PolicyEvaluator();
  PolicyEvaluator(const PolicyEvaluator&) = delete;
  PolicyEvaluator& operator=(const PolicyEvaluator&) = delete;

  const PolicyParams& params() const { return *params_; }

  /// Runs the network on obs and clears any pending head gradient.
  const PolicyDistribution& evaluate(std::span<const double> obs);
  const PolicyDistribution& distribution() const { return dist_; }

  /// Adds weight * d log pi(action|obs) to the pending head gradient.
  void add_log_prob_direction(const Action& action, double weight);
  /// Adds weight * d KL(pivot || pi(.|obs)) to the pending head gradient.
  void add_kl_direction(const PolicyDistribution& pivot, double weight);
  /// Back-propagates the pending head gradient and accumulates into grad.
  void backpropagate(std::span<double> grad);

 private:
  struct Impl;
  const PolicyParams* params_;
  PolicyDistribution dist_;
  std::vector<double> head_grad_;
  std::vector<double> log_std_grad_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace counterpol
