#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "counterpol/counterpol.hpp"
#include "support.hpp"

using namespace counterpol;
using counterpol::testing::make_trajectory;
using counterpol::testing::perturbed;
using counterpol::testing::TwoStateMdp;

namespace {

double norm(const GradVector& g) {
  double s = 0.0;
  for (double x : g) s += x * x;
  return std::sqrt(s);
}

Batch cartpole_batch(const PolicyParams& p, std::size_t n, std::uint64_t seed, double gamma = 0.99) {
  const auto env = make_environment(EnvId::kCartPole);
  return sample_episodes(*env, p, n, seed, gamma);
}

PolicyParams cartpole_policy(std::uint64_t seed) {
  return init_params(default_arch(make_spec(EnvId::kCartPole)), seed);
}

/// Exact expected return of the two-step MDP by enumerating (a0, a1).
double two_state_return(const PolicyParams& p, double gamma) {
  const auto s0 = std::get<Categorical>(forward(p, std::vector<double>{1.0, 0.0})).probs;
  const auto s1 = std::get<Categorical>(forward(p, std::vector<double>{0.0, 1.0})).probs;
  double j = 0.0;
  for (std::size_t a0 = 0; a0 < 2; ++a0) {
    const bool stay = a0 == 1;
    const auto& second = stay ? s0 : s1;
    for (std::size_t a1 = 0; a1 < 2; ++a1) {
      const double prob = s0[a0] * second[a1];
      const double ret = (stay ? 1.0 : 0.0) + gamma * ((stay && a1 == 1) ? 1.0 : 0.0);
      j += prob * ret;
    }
  }
  return j;
}

/// Identity hidden layer; the output bias makes action 1 nearly certain in
/// state 0, which keeps the score-function variance small.
PolicyParams two_state_policy() {
  const PolicyArch arch{2, {2}, CategoricalHead{2}};
  return {arch, {1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.3, -0.2, 0.1, 0.4, 0.0, 9.0}};
}

}  // namespace

TEST(Sgn, ZeroMapsToZero) {
  static_assert(sgn(0.0) == 0);
  static_assert(sgn(-0.0) == 0);
  static_assert(sgn(3.0) == 1);
  static_assert(sgn(-1e-300) == -1);
}

TEST(PolicyGradientEstimate, ZeroRewardsGiveZero) {
  auto t = make_trajectory({0, 0, 0});
  const auto arch = PolicyArch{1, {3}, CategoricalHead{2}};
  const auto p = init_params(arch, 0);
  for (double g : policy_gradient_estimate(p, Batch{{t, t}, 0.9})) EXPECT_EQ(g, 0.0);
}

TEST(PolicyGradientEstimate, SingleStepIsRewardTimesScore) {
  const auto p = cartpole_policy(2);
  const Batch full = cartpole_batch(p, 1, 4);
  Trajectory one;
  one.steps = {full.trajectories[0].steps[0]};
  one.steps[0].reward = 3.5;
  const auto g = policy_gradient_estimate(p, Batch{{one}, 0.99});
  const auto score = grad_log_prob(p, one.steps[0].obs, one.steps[0].action);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(g[i], 3.5 * score[i], 1e-12);
}

TEST(PolicyGradientEstimate, NormalisedByTotalSteps) {
  const auto p = cartpole_policy(3);
  const Batch b = cartpole_batch(p, 3, 10);
  GradVector expect(p.theta.size(), 0.0);
  for (const auto& traj : b.trajectories) {
    for (std::size_t t = 0; t < traj.length(); ++t) {
      const double q = reward_to_go(traj, t, b.gamma);
      const auto s = grad_log_prob(p, traj.steps[t].obs, traj.steps[t].action);
      for (std::size_t i = 0; i < s.size(); ++i) expect[i] += q * s[i];
    }
  }
  const auto g = policy_gradient_estimate(p, b);
  const double inv = 1.0 / static_cast<double>(b.total_steps());
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(g[i], expect[i] * inv, 1e-10);
}

TEST(PolicyGradientEstimate, MatchesExactGradientOnEnumerableMdp) {
  // Undiscounted, so reward-to-go weighting is an unbiased gradient of J.
  const TwoStateMdp env;
  const PolicyParams p = two_state_policy();
  const auto numeric = counterpol::testing::numeric_gradient(
      [&](const std::vector<double>& th) { return two_state_return({p.arch, th}, 1.0); }, p.theta);

  const Batch b = sample_episodes(env, p, 10000, 0, 1.0);
  ASSERT_EQ(b.total_steps(), 20000u);
  auto g = policy_gradient_estimate(p, b);
  // The estimator averages over visited states; every episode has T = 2.
  for (double& x : g) x *= 2.0;
  GradVector diff(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) diff[i] = g[i] - numeric[i];
  EXPECT_LE(norm(diff) / norm(numeric), 1e-3);
}

TEST(PolicyGradientEstimate, DiscountedMatchesExactEstimatorExpectation) {
  // With gamma < 1 the reward-to-go estimator drops the gamma^t prefactor;
  // compare it against its own exact expectation over all action sequences.
  const TwoStateMdp env;
  const double gamma = 0.9;
  const PolicyParams p = two_state_policy();
  const std::vector<double> obs0{1.0, 0.0}, obs1{0.0, 1.0};
  auto probs = [&](const std::vector<double>& obs) { return std::get<Categorical>(forward(p, obs)).probs; };
  auto score = [&](const std::vector<double>& obs, std::size_t a) {
    return counterpol::testing::numeric_gradient(
        [&](const std::vector<double>& th) { return log_prob(forward({p.arch, th}, obs), Action{a}); }, p.theta);
  };
  GradVector expected(p.theta.size(), 0.0);
  for (std::size_t a0 = 0; a0 < 2; ++a0) {
    const bool stay = a0 == 1;
    const auto& second_obs = stay ? obs0 : obs1;
    for (std::size_t a1 = 0; a1 < 2; ++a1) {
      const double prob = probs(obs0)[a0] * probs(second_obs)[a1];
      const double r1 = (stay && a1 == 1) ? 1.0 : 0.0;
      const double rtg0 = (stay ? 1.0 : 0.0) + gamma * r1;
      const auto s0 = score(obs0, a0), s1 = score(second_obs, a1);
      for (std::size_t i = 0; i < expected.size(); ++i) expected[i] += prob * (rtg0 * s0[i] + r1 * s1[i]) / 2.0;
    }
  }
  const auto g = policy_gradient_estimate(p, sample_episodes(env, p, 10000, 1, gamma));
  GradVector diff(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) diff[i] = g[i] - expected[i];
  EXPECT_LE(norm(diff) / norm(expected), 1e-3);
}

TEST(ReturnPenaltyGrad, SignFollowsPerformanceGap) {
  const auto p = cartpole_policy(5);
  const Batch b = cartpole_batch(p, 4, 20);
  const double j = estimate_performance(b);
  const auto pg = policy_gradient_estimate(p, b);
  const auto below = return_penalty_grad(p, b, j + 1.0);
  const auto above = return_penalty_grad(p, b, j - 1.0);
  const auto at = return_penalty_grad(p, b, j);
  for (std::size_t i = 0; i < pg.size(); ++i) {
    EXPECT_EQ(below[i], -pg[i]);
    EXPECT_EQ(above[i], pg[i]);
    EXPECT_EQ(at[i], 0.0);
  }
}

TEST(KlGradientEstimate, ZeroAtPivotAndPerStateAverage) {
  const auto env = make_environment(EnvId::kAcrobot);
  const auto pivot = init_params(default_arch(env->spec()), 1);
  std::mt19937_64 rng(2);
  const auto params = perturbed(pivot, rng, 0.1);
  for (double g : kl_gradient_estimate(pivot, pivot, sample_episodes(*env, pivot, 1, 0, 0.99))) {
    EXPECT_EQ(g, 0.0);
  }
  const Batch full = sample_episodes(*env, params, 1, 8, 0.99);
  Trajectory three;
  three.steps.assign(full.trajectories[0].steps.begin(), full.trajectories[0].steps.begin() + 3);
  GradVector expect(params.theta.size(), 0.0);
  for (const auto& s : three.steps) {
    const auto g = grad_kl(pivot, params, s.obs);
    for (std::size_t i = 0; i < g.size(); ++i) expect[i] += g[i] / 3.0;
  }
  const auto got = kl_gradient_estimate(pivot, params, Batch{{three}, 0.99});
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], expect[i], 1e-12);

  Trajectory one;
  one.steps = {three.steps[1]};
  const auto single = kl_gradient_estimate(pivot, params, Batch{{one}, 0.99});
  const auto direct = grad_kl(pivot, params, one.steps[0].obs);
  for (std::size_t i = 0; i < single.size(); ++i) EXPECT_NEAR(single[i], direct[i], 1e-15);
}

TEST(CounterfactualObjective, FusedPassEqualsComposition) {
  std::mt19937_64 rng(3);
  const auto pivot = cartpole_policy(4);
  const auto params = perturbed(pivot, rng, 0.05);
  const Batch b = cartpole_batch(params, 3, 40);
  const double r = 50.0, k = 10.0;
  const auto fused = counterfactual_objective_gradient(pivot, params, b, r, k);
  const auto ret = return_penalty_grad(params, b, r);
  const auto kl = kl_gradient_estimate(pivot, params, b);
  EXPECT_EQ(fused.j_estimate, estimate_performance(b));
  EXPECT_NEAR(fused.kl_estimate, estimate_kl(pivot, params, b), 1e-15);
  for (std::size_t i = 0; i < ret.size(); ++i) EXPECT_NEAR(fused.grad[i], ret[i] + k * kl[i], 1e-10);
}

TEST(CounterpolOptimize, TargetAtCurrentReturnStopsBeforeAnyUpdate) {
  const auto env = make_environment(EnvId::kCartPole);
  const auto p = cartpole_policy(0);
  CounterpolConfig cfg = CounterpolConfig::defaults_for(EnvId::kCartPole);
  cfg.seed = 5;
  // The first batch is drawn from derive_seed(seed, 0).
  cfg.r_target = estimate_performance(sample_episodes(*env, p, 10, derive_seed(5, 0), cfg.gamma));
  const auto res = counterpol_optimize(p, *env, cfg);
  EXPECT_EQ(res.log.status, RunStatus::kConverged);
  EXPECT_EQ(res.log.inner_updates, 0);
  EXPECT_EQ(res.log.outer_updates, 0);
  EXPECT_EQ(res.log.records.size(), 1u);
  EXPECT_EQ(res.policy.theta, p.theta);
}

TEST(CounterpolOptimize, ConvergedImpliesLastEstimateWithinDelta) {
  const auto env = make_environment(EnvId::kCartPole);
  CounterpolConfig cfg = CounterpolConfig::defaults_for(EnvId::kCartPole);
  cfg.gamma = 1.0;
  cfg.r_target = 60.0;
  cfg.eta = 1e-2;
  cfg.seed = 1;
  const auto res = counterpol_optimize(cartpole_policy(0), *env, cfg);
  ASSERT_EQ(res.log.status, RunStatus::kConverged);
  const auto& last = res.log.records.back();
  EXPECT_LT(std::abs(last.j_estimate - cfg.r_target), cfg.delta);
  EXPECT_EQ(last.grad_norm, 0.0);
  EXPECT_EQ(res.log.inner_updates + 1, static_cast<int>(res.log.records.size()));
  EXPECT_EQ(res.log.episodes, res.log.records.size() * 10);
  for (const auto& r : res.log.records) {
    EXPECT_TRUE(std::isfinite(r.j_estimate));
    EXPECT_GE(r.kl_estimate, 0.0);
    EXPECT_EQ(r.return_penalty, std::abs(r.j_estimate - cfg.r_target));
  }
}

TEST(CounterpolOptimize, PivotBookkeeping) {
  const auto env = make_environment(EnvId::kCartPole);
  CounterpolConfig cfg = CounterpolConfig::defaults_for(EnvId::kCartPole);
  cfg.r_target = 1e9;  // never reached
  cfg.m = 3;
  cfg.max_outer_iters = 2;
  const auto res = counterpol_optimize(cartpole_policy(1), *env, cfg);
  EXPECT_EQ(res.log.status, RunStatus::kMaxItersExceeded);
  ASSERT_EQ(res.log.records.size(), 6u);
  EXPECT_EQ(res.log.outer_updates, 2);
  EXPECT_EQ(res.log.inner_updates, 6);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(res.log.records[i].outer_iter, static_cast<int>(i / 3));
    EXPECT_EQ(res.log.records[i].inner_step, static_cast<int>(i % 3));
    EXPECT_EQ(res.log.records[i].pivot_updated, i % 3 == 2);
  }
  // The first estimate of each outer iteration is taken against the pivot
  // the parameters were just copied into.
  EXPECT_EQ(res.log.records[0].kl_estimate, 0.0);
  EXPECT_EQ(res.log.records[3].kl_estimate, 0.0);
  EXPECT_GT(res.log.records[1].kl_estimate, 0.0);
}

TEST(CounterpolOptimize, FullyDeterministic) {
  const auto env = make_environment(EnvId::kAcrobot);
  const auto p = init_params(default_arch(env->spec()), 3);
  CounterpolConfig cfg = CounterpolConfig::defaults_for(EnvId::kAcrobot);
  cfg.r_target = -300;
  cfg.max_outer_iters = 2;
  cfg.seed = 17;
  const auto a = counterpol_optimize(p, *env, cfg);
  const auto b = counterpol_optimize(p, *env, cfg);
  EXPECT_EQ(a.policy.theta, b.policy.theta);
  ASSERT_EQ(a.log.records.size(), b.log.records.size());
  for (std::size_t i = 0; i < a.log.records.size(); ++i) {
    EXPECT_EQ(a.log.records[i].j_estimate, b.log.records[i].j_estimate);
    EXPECT_EQ(a.log.records[i].kl_estimate, b.log.records[i].kl_estimate);
    EXPECT_EQ(a.log.records[i].grad_norm, b.log.records[i].grad_norm);
  }
}

TEST(CounterpolOptimize, FirstStepMovesReturnTowardsTarget) {
  // Expected first-order change of J along the update is -eta * sgn * |grad J|^2.
  const auto p = cartpole_policy(6);
  const Batch b = cartpole_batch(p, 10, 3);
  const double j = estimate_performance(b);
  for (double target : {j + 100.0, j - 100.0}) {
    const auto g = counterfactual_objective_gradient(p, p, b, target, 10.0).grad;
    const auto pg = policy_gradient_estimate(p, b);
    double dot = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) dot += -g[i] * pg[i];
    if (target > j) {
      EXPECT_GT(dot, 0.0);
    } else {
      EXPECT_LT(dot, 0.0);
    }
  }
}

TEST(CounterpolConfig, Validation) {
  CounterpolConfig ok;
  EXPECT_NO_THROW(ok.validate());
  auto bad = [](auto mutate) {
    CounterpolConfig c;
    mutate(c);
    EXPECT_THROW(c.validate(), std::invalid_argument);
  };
  bad([](CounterpolConfig& c) { c.delta = 0; });
  bad([](CounterpolConfig& c) { c.k = -1; });
  bad([](CounterpolConfig& c) { c.m = 0; });
  bad([](CounterpolConfig& c) { c.n_episodes = 0; });
  bad([](CounterpolConfig& c) { c.eta = 0; });
  bad([](CounterpolConfig& c) { c.gamma = 0; });
  bad([](CounterpolConfig& c) { c.max_outer_iters = 0; });
  bad([](CounterpolConfig& c) { c.r_target = NAN; });
}

TEST(CounterpolConfig, EnvironmentDefaults) {
  const auto cp = CounterpolConfig::defaults_for(EnvId::kCartPole);
  EXPECT_EQ(cp.delta, 10.0);
  EXPECT_EQ(cp.k, 10.0);
  const auto ac = CounterpolConfig::defaults_for(EnvId::kAcrobot);
  EXPECT_EQ(ac.delta, 2.5);
  EXPECT_EQ(ac.k, 1.0);
  const auto pd = CounterpolConfig::defaults_for(EnvId::kPendulum);
  EXPECT_EQ(pd.delta, 37.5);
  EXPECT_EQ(pd.k, 1e5);
  for (const auto& c : {cp, ac, pd}) {
    EXPECT_EQ(c.m, 10);
    EXPECT_EQ(c.n_episodes, 10);
  }
}

TEST(TrustRegion, EquivalenceOnSharedBatches) {
  std::mt19937_64 rng(21);
  for (auto id : {EnvId::kCartPole, EnvId::kAcrobot, EnvId::kPendulum}) {
    const auto env = make_environment(id);
    const auto pivot = init_params(default_arch(env->spec()), 4);
    for (int i = 0; i < 5; ++i) {
      const auto params = perturbed(pivot, rng, 0.05);
      const Batch b = sample_episodes(*env, params, 2, 100 + i, 0.99);
      const auto r = verify_equivalence(pivot, params, b, 3.0 * (i + 1));
      EXPECT_TRUE(r.precondition_met);
      EXPECT_TRUE(r.equivalent);
      EXPECT_LT(r.max_deviation, kEquivalenceTolerance);
    }
  }
}

TEST(TrustRegion, ReportsUnmetPrecondition) {
  const auto p = cartpole_policy(0);
  const Batch b = cartpole_batch(p, 2, 0);
  const auto r = verify_equivalence(p, p, b, 1.0, estimate_performance(b) - 1.0);
  EXPECT_FALSE(r.precondition_met);
  EXPECT_FALSE(r.equivalent);
}

TEST(TrustRegion, AscentDirectionAndOptimizer) {
  std::mt19937_64 rng(9);
  const auto pivot = cartpole_policy(2);
  const auto params = perturbed(pivot, rng, 0.05);
  const Batch b = cartpole_batch(params, 3, 0);
  const auto tr = trust_region_gradient(pivot, params, b, 4.0);
  const auto pg = policy_gradient_estimate(params, b);
  const auto kl = kl_gradient_estimate(pivot, params, b);
  for (std::size_t i = 0; i < tr.size(); ++i) EXPECT_NEAR(tr[i], pg[i] - 4.0 * kl[i], 1e-12);

  const auto env = make_environment(EnvId::kCartPole);
  TrustRegionConfig cfg;
  cfg.lambda = 10.0;
  const auto a = trust_region_optimize(pivot, *env, cfg, 4);
  const auto c = trust_region_optimize(pivot, *env, cfg, 4);
  EXPECT_EQ(a.theta, c.theta);
  EXPECT_NE(a.theta, pivot.theta);
}
