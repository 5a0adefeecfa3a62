#include <benchmark/benchmark.h>

#include <vector>

#include "counterpol/counterpol.hpp"
#include "counterpol/envs.hpp"
#include "counterpol/policy.hpp"
#include "counterpol/rollout.hpp"

using namespace counterpol;

namespace {

EnvId env_arg(const benchmark::State& state) { return static_cast<EnvId>(state.range(0)); }

void BM_EnvStep(benchmark::State& state) {
  const auto env = make_environment(env_arg(state));
  const Action action = std::holds_alternative<DiscreteSpace>(env->spec().action_space)
                            ? Action{std::size_t{0}}
                            : Action{std::vector<double>{0.5}};
  auto current = env->reset(1).state;
  for (auto _ : state) {
    auto next = env->step(current, action);
    if (next.result.terminated || next.result.truncated) {
      current = env->reset(2).state;
    } else {
      current = std::move(next.state);
    }
    benchmark::DoNotOptimize(current);
  }
  state.SetLabel(std::string(env_name(env_arg(state))));
}

void BM_Forward(benchmark::State& state) {
  const auto spec = make_spec(env_arg(state));
  const auto params = init_params(default_arch(spec), 3);
  const std::vector<double> obs(spec.obs_dim, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(forward(params, obs));
  state.SetLabel(spec.name);
}

void BM_GradLogProb(benchmark::State& state) {
  const auto spec = make_spec(env_arg(state));
  const auto params = init_params(default_arch(spec), 3);
  const std::vector<double> obs(spec.obs_dim, 0.1);
  Rng rng(4);
  const Action a = sample(forward(params, obs), rng);
  for (auto _ : state) benchmark::DoNotOptimize(grad_log_prob(params, obs, a));
  state.SetLabel(spec.name);
}

void BM_SampleEpisodes(benchmark::State& state) {
  const auto env = make_environment(env_arg(state));
  const auto params = init_params(default_arch(env->spec()), 3);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_episodes(*env, params, 10, seed++, 1.0));
  state.SetLabel(env->spec().name);
}

// One inner step's gradient work on a 10-episode batch.
void BM_ObjectiveGradient(benchmark::State& state) {
  const auto env = make_environment(env_arg(state));
  const auto pivot = init_params(default_arch(env->spec()), 3);
  auto params = pivot;
  for (double& t : params.theta) t *= 1.01;
  const Batch batch = sample_episodes(*env, params, 10, 5, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(counterfactual_objective_gradient(pivot, params, batch, 1e9, 10.0));
  }
  state.counters["steps"] = static_cast<double>(batch.total_steps());
  state.SetLabel(env->spec().name);
}

}  // namespace

#define COUNTERPOL_ENVS ->Arg(0)->Arg(1)->Arg(2)

BENCHMARK(BM_EnvStep) COUNTERPOL_ENVS;
BENCHMARK(BM_Forward) COUNTERPOL_ENVS;
BENCHMARK(BM_GradLogProb) COUNTERPOL_ENVS;
BENCHMARK(BM_SampleEpisodes) COUNTERPOL_ENVS->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ObjectiveGradient) COUNTERPOL_ENVS->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
