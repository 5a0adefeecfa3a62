#include "counterpol/experiment.hpp"

#include <cstdio>
#include <stdexcept>

#include "counterpol/rollout.hpp"

namespace counterpol {

Table1Setup table1_setup(EnvId id) {
  Table1Setup s;
  s.env = id;
  s.trainer = TrainerConfig::defaults_for(id);
  s.counterpol = CounterpolConfig::defaults_for(id);
  s.counterpol.gamma = 1.0;
  s.counterpol.max_outer_iters = 500;
  switch (id) {
    case EnvId::kCartPole:
      s.targets = {50.0, 250.0, 450.0};
      s.reference_levels = {235.6, 368.2, 500.0};
      s.trainer.seed = 2;
      break;
    case EnvId::kAcrobot:
      s.targets = {-120.0, -100.0, -80.0};
      s.reference_levels = {-146.7, -89.0, -84.3};
      break;
    case EnvId::kPendulum:
      s.targets = {-1000.0, -750.0, -500.0};
      s.reference_levels = {-853.5, -792.6, -568.0};
      s.counterpol.max_outer_iters = 100;  // each outer iteration costs 20k env steps
      break;
  }
  return s;
}

std::uint64_t evaluation_seed(std::uint64_t run_seed) { return derive_seed(run_seed, 0xe7a1'0000ULL); }

CellResult run_counterfactual(const Environment& env, const PolicyParams& original,
                              double j_original, const CounterpolConfig& cfg,
                              int eval_episodes) {
  if (eval_episodes < 1) throw std::invalid_argument("eval_episodes must be positive");
  auto run = counterpol_optimize(original, env, cfg);

  const Batch eval = sample_episodes(env, run.policy, static_cast<std::size_t>(eval_episodes),
                                     evaluation_seed(cfg.seed), 1.0);
  const ReturnStats stats = return_stats(eval);

  CellResult cell;
  cell.env = env.spec().name;
  cell.j_pi0 = j_original;
  cell.r_target = cfg.r_target;
  cell.seed = cfg.seed;
  cell.n_outer = run.log.outer_updates;
  cell.n_inner = run.log.inner_updates;
  cell.j_cf_eval_mean = stats.mean;
  cell.j_cf_eval_std = stats.std;
  cell.kl_final = estimate_kl(original, run.policy, eval);
  cell.cf_policy = std::move(run.policy);
  cell.log = std::move(run.log);
  return cell;
}

std::vector<OriginalPolicy> select_originals(const TrainingReport& report, std::size_t count) {
  if (report.checkpoints.empty()) throw std::invalid_argument("training report has no checkpoints");
  std::vector<OriginalPolicy> out;
  for (const auto& c : report.checkpoints) {
    if (out.size() == count) break;
    if (c.level) out.push_back({c.params, c.achieved_j});
  }
  const auto& last = report.checkpoints.back();
  while (out.size() < count) out.push_back({last.params, last.achieved_j});
  return out;
}

std::vector<CellResult> run_table1_grid(const Table1Setup& setup,
                                        const std::vector<OriginalPolicy>& originals,
                                        std::uint64_t base_seed, const CellCallback& on_cell) {
  const auto env = make_environment(setup.env);
  std::vector<CellResult> cells;
  for (const auto& original : originals) {
    for (double target : setup.targets) {
      for (int s = 0; s < setup.seeds; ++s) {
        CounterpolConfig cfg = setup.counterpol;
        cfg.r_target = target;
        cfg.seed = base_seed + static_cast<std::uint64_t>(s);
        cells.push_back(
            run_counterfactual(*env, original.params, original.j, cfg, setup.eval_episodes));
        if (on_cell) on_cell(cells.back());
      }
    }
  }
  return cells;
}

void write_table1_csv(std::ostream& out, const std::vector<CellResult>& cells) {
  out << "env,J_pi0,R_target,seed,n_outer,n_inner,J_cf_eval_mean,J_cf_eval_std,kl_final\n";
  char buf[512];
  for (const auto& c : cells) {
    std::snprintf(buf, sizeof buf, "%s,%.4f,%.4f,%llu,%d,%d,%.4f,%.4f,%.8g\n", c.env.c_str(),
                  c.j_pi0, c.r_target, static_cast<unsigned long long>(c.seed), c.n_outer,
                  c.n_inner, c.j_cf_eval_mean, c.j_cf_eval_std, c.kl_final);
    out << buf;
  }
}

}  // namespace counterpol
