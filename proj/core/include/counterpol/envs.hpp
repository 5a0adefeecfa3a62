#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "counterpol/random.hpp"

namespace counterpol {

enum class EnvId { kCartPole, kAcrobot, kPendulum };

struct DiscreteSpace {
  std::size_t n = 0;
};

struct BoxSpace {
  double low = 0.0;
  double high = 0.0;
  std::size_t dim = 0;
};

using ActionSpace = std::variant<DiscreteSpace, BoxSpace>;

using Observation = std::vector<double>;

/// Either a discrete action index or a continuous action vector.
using Action = std::variant<std::size_t, std::vector<double>>;

struct EnvSpec {
  std::string name;
  std::size_t obs_dim = 0;
  ActionSpace action_space;
  int max_episode_steps = 0;
  std::optional<double> known_max_return;
};

struct EnvState {
  std::vector<double> internal;
  int step_count = 0;
  bool finished = false;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;
};

struct ResetResult {
  EnvState state;
  Observation observation;
};

struct Transition {
  EnvState state;
  StepResult result;
};

class InvalidAction : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Episodic environment with deterministic transitions. All randomness lives
/// in reset(); step() is a pure function of (state, action).
class Environment {
 public:
  explicit Environment(EnvSpec spec) : spec_(std::move(spec)) {}
  virtual ~Environment() = default;

  const EnvSpec& spec() const { return spec_; }

  ResetResult reset(std::uint64_t seed) const;

  /// Advances one step. Discrete indices outside the action space throw
  /// InvalidAction; continuous actions are clipped to the box. Stepping a
  /// finished episode throws std::logic_error.
  Transition step(const EnvState& state, const Action& action) const;

 protected:
  struct Dynamics {
    std::vector<double> next;
    double reward = 0.0;
    bool terminated = false;
  };

  virtual std::vector<double> initial_state(Rng& rng) const = 0;
  virtual Observation observe(std::span<const double> internal) const = 0;
  /// `action` is already validated (and clipped for box spaces).
  virtual Dynamics advance(std::span<const double> internal, const Action& action) const = 0;

 private:
  EnvSpec spec_;
};

EnvSpec make_spec(EnvId id);
std::unique_ptr<Environment> make_environment(EnvId id);

std::optional<double> max_return(const EnvSpec& spec);

/// Parses the command-line form: cartpole | acrobot | pendulum.
std::optional<EnvId> parse_env_id(std::string_view text);
std::string_view env_name(EnvId id);

/// ((x + pi) mod 2pi) - pi with a floored modulus, result in [-pi, pi).
double angle_normalize(double x);

}  // namespace counterpol
