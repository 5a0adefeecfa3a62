#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "counterpol/envs.hpp"
#include "counterpol/policy.hpp"
#include "counterpol/rollout.hpp"

namespace counterpol::testing {

/// Central difference of f at x along every coordinate.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f(x);
    x[i] = saved - h;
    const double down = f(x);
    x[i] = saved;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// Coordinates smaller than the floor are compared in absolute terms.
inline constexpr double kRelFloor = 1e-6;

inline double max_relative_error(std::span<const double> a, std::span<const double> b,
                                 double floor = kRelFloor) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

inline PolicyParams perturbed(const PolicyParams& p, std::mt19937_64& rng, double scale) {
  PolicyParams q = p;
  std::normal_distribution<double> d(0.0, scale);
  for (auto& t : q.theta) t += d(rng);
  return q;
}

inline Trajectory make_trajectory(const std::vector<double>& rewards) {
  Trajectory t;
  for (double r : rewards) {
    StepRecord s;
    s.obs = {0.0};
    s.action = std::size_t{0};
    s.reward = r;
    t.steps.push_back(s);
  }
  return t;
}

/// Two-state, two-action MDP with one-hot observations and a fixed two-step
/// horizon. In state 0, action 1 pays 1 and stays; action 0 pays 0 and moves
/// to the absorbing state 1, which pays nothing.
class TwoStateMdp : public Environment {
 public:
  TwoStateMdp() : Environment(EnvSpec{"two_state", 2, DiscreteSpace{2}, 2, std::nullopt}) {}

 protected:
  std::vector<double> initial_state(Rng&) const override { return {0.0}; }
  Observation observe(std::span<const double> s) const override {
    return s[0] == 0.0 ? Observation{1.0, 0.0} : Observation{0.0, 1.0};
  }
  Dynamics advance(std::span<const double> s, const Action& a) const override {
    const bool stay = s[0] == 0.0 && std::get<std::size_t>(a) == 1;
    if (stay) return {{0.0}, 1.0, false};
    return {{1.0}, 0.0, false};
  }
};

}  // namespace counterpol::testing
