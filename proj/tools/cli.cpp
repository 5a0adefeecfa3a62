#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "counterpol/counterpol.hpp"
#include "counterpol/envs.hpp"
#include "counterpol/experiment.hpp"
#include "counterpol/persist.hpp"
#include "counterpol/random.hpp"
#include "counterpol/rollout.hpp"
#include "counterpol/trainer.hpp"
#include "json.hpp"

namespace counterpol::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct Failure {
  std::string code;
  std::string message;
  int exit_code = 1;
};

[[noreturn]] void fail(std::string code, std::string message, int exit_code = 1) {
  throw Failure{std::move(code), std::move(message), exit_code};
}

std::string valid_env_ids() { return "cartpole, acrobot, pendulum"; }

EnvId require_env(const std::string& name) {
  const auto id = parse_env_id(name);
  if (!id) fail("unknown_env", "unknown env '" + name + "'; valid ids: " + valid_env_ids(), 2);
  return *id;
}

fs::path default_out(const std::string& subcommand) {
  const char* root = std::getenv("COUNTERPOL_OUT");
  return fs::path(root && *root ? root : "counterpol_out") / subcommand;
}

Checkpoint load_for_env(const fs::path& path, EnvId id) {
  if (!fs::exists(path)) fail("missing_file", "checkpoint '" + path.string() + "' not found", 3);
  Checkpoint ck;
  try {
    ck = load_checkpoint(path);
  } catch (const CheckpointError& e) {
    fail("checkpoint_" + std::string(to_string(e.kind())), e.what(), 3);
  }
  if (ck.env_id != env_name(id)) {
    fail("env_mismatch",
         "checkpoint '" + path.string() + "' is for env '" + ck.env_id + "', not '" +
             std::string(env_name(id)) + "'",
         2);
  }
  const EnvSpec spec = make_spec(id);
  if (ck.policy.arch.obs_dim != spec.obs_dim) {
    fail("env_mismatch", "checkpoint observation size does not match env", 2);
  }
  return ck;
}

void write_file(const fs::path& path, const std::string& text) {
  try {
    write_text_file(path, text);
  } catch (const CheckpointError& e) {
    fail("io", e.what(), 3);
  }
}

template <class Fn>
void write_stream(const fs::path& path, Fn&& fn) {
  std::ostringstream s;
  fn(s);
  write_file(path, s.str());
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  std::string env;
  std::vector<double> levels;
  std::uint64_t seed = 0;
  std::optional<int> updates;
  std::optional<int> n_episodes;
  std::optional<double> eta_policy;
  std::optional<double> eta_value;
  std::optional<double> gamma;
  std::string out;
  std::string config;
};

void add_train(CLI::App& app, TrainArgs& a) {
  auto* sub = app.add_subcommand("train", "Train original policies and snapshot them at return levels");
  sub->add_option("--env", a.env, "cartpole | acrobot | pendulum");
  sub->add_option("--levels", a.levels, "Rolling-mean return levels (ascending)")->delimiter(',');
  sub->add_option("--seed", a.seed, "Training seed");
  sub->add_option("--updates", a.updates, "Maximum number of policy updates");
  sub->add_option("--n", a.n_episodes, "Episodes per update");
  sub->add_option("--eta-policy", a.eta_policy, "Policy learning rate");
  sub->add_option("--eta-value", a.eta_value, "Value learning rate");
  sub->add_option("--gamma", a.gamma, "Discount factor");
  sub->add_option("--out", a.out, "Output directory");
  sub->add_option("--config", a.config, "Replay a resolved train config.json");
}

TrainRunConfig resolve_train(const TrainArgs& a) {
  TrainRunConfig cfg;
  if (!a.config.empty()) {
    if (!fs::exists(a.config)) fail("missing_file", "config '" + a.config + "' not found", 3);
    cfg = train_run_config_from_json(read_text_file(a.config));
    if (!a.out.empty()) cfg.out_dir = a.out;
    if (cfg.out_dir.empty()) cfg.out_dir = default_out("train");
    return cfg;
  }
  if (a.env.empty()) fail("usage", "train requires --env or --config", 2);
  const EnvId id = require_env(a.env);
  cfg.env_id = std::string(env_name(id));
  cfg.trainer = TrainerConfig::defaults_for(id);
  auto& t = cfg.trainer;
  if (!a.levels.empty()) t.checkpoint_levels = a.levels;
  t.seed = a.seed;
  if (a.updates) t.total_updates = *a.updates;
  if (a.n_episodes) t.n_episodes_per_update = *a.n_episodes;
  if (a.eta_policy) t.eta_policy = *a.eta_policy;
  if (a.eta_value) t.eta_value = *a.eta_value;
  if (a.gamma) t.gamma = *a.gamma;
  t.validate();
  cfg.out_dir = a.out.empty() ? default_out("train") : fs::path(a.out);
  return cfg;
}

Checkpoint make_checkpoint(const std::string& env_id, const TrainedCheckpoint& c,
                           std::uint64_t seed) {
  Checkpoint ck;
  ck.env_id = env_id;
  ck.policy = c.params;
  ck.meta.achieved_j = c.achieved_j;
  ck.meta.seed = static_cast<std::int64_t>(seed);
  ck.meta.created_by = "counterpol train";
  ck.meta.update_index = c.update_index;
  std::ostringstream prov;
  prov << "train env=" << env_id << " seed=" << seed << " update=" << c.update_index;
  if (c.level) prov << " level=" << *c.level;
  ck.meta.provenance = prov.str();
  return ck;
}

/// Writes level_<i>.txt per snapshot and final.txt; returns the paths in order.
std::vector<fs::path> save_training(const TrainRunConfig& cfg, const TrainingReport& report) {
  std::vector<fs::path> paths;
  json summary;
  summary["updates_run"] = report.updates_run;
  summary["warnings"] = report.warnings;
  summary["checkpoints"] = json::array();
  int level_index = 0;
  for (const auto& c : report.checkpoints) {
    const std::string name =
        c.level ? "level_" + std::to_string(level_index++) + ".txt" : std::string("final.txt");
    const fs::path path = cfg.out_dir / name;
    write_file(path, serialize_checkpoint(make_checkpoint(cfg.env_id, c, cfg.trainer.seed)));
    paths.push_back(path);
    json entry = {{"file", name},
                  {"achieved_j", c.achieved_j},
                  {"update_index", c.update_index},
                  {"rolling_mean", std::isfinite(c.rolling_mean) ? json(c.rolling_mean) : json()}};
    entry["level"] = c.level ? json(*c.level) : json();
    summary["checkpoints"].push_back(entry);
  }
  write_file(cfg.out_dir / "train_report.json", summary.dump(2) + "\n");
  return paths;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const TrainRunConfig cfg = resolve_train(a);
  write_file(cfg.out_dir / "config.json", train_run_config_to_json(cfg));
  const auto env = make_environment(require_env(cfg.env_id));
  const TrainingReport report = train_baseline(*env, cfg.trainer);
  const auto paths = save_training(cfg, report);
  for (std::size_t i = 0; i < report.checkpoints.size(); ++i) {
    const auto& c = report.checkpoints[i];
    out << "checkpoint " << paths[i].filename().string() << " level="
        << (c.level ? fmt("%.4g", *c.level) : std::string("final")) << " update=" << c.update_index
        << " J=" << fmt("%.4f", c.achieved_j) << "\n";
  }
  for (const auto& w : report.warnings) out << "warning: " << w << "\n";
  return 0;
}

// ---- counterfactual -------------------------------------------------------

struct CounterfactualArgs {
  std::string env;
  std::string checkpoint;
  std::optional<double> target;
  std::optional<double> delta;
  std::optional<double> k;
  std::optional<int> m;
  std::optional<int> n_episodes;
  std::optional<double> eta;
  std::optional<double> gamma;
  std::optional<int> max_outer_iters;
  std::uint64_t seed = 0;
  int eval_episodes = 100;
  std::string out;
  std::string config;
};

void add_counterfactual(CLI::App& app, CounterfactualArgs& a) {
  auto* sub = app.add_subcommand("counterfactual", "Search for a counterfactual policy with a target return");
  sub->add_option("--env", a.env, "cartpole | acrobot | pendulum");
  sub->add_option("--checkpoint", a.checkpoint, "Original policy checkpoint");
  sub->add_option("--target", a.target, "Target return R");
  sub->add_option("--delta", a.delta, "Stopping tolerance");
  sub->add_option("--k", a.k, "KL weight");
  sub->add_option("--m", a.m, "Gradient steps per KL pivot");
  sub->add_option("--n", a.n_episodes, "Episodes per gradient step");
  sub->add_option("--eta", a.eta, "Step size");
  sub->add_option("--gamma", a.gamma, "Discount factor (default 1)");
  sub->add_option("--max-outer-iters", a.max_outer_iters, "Cap on pivot updates");
  sub->add_option("--seed", a.seed, "Run seed");
  sub->add_option("--eval-episodes", a.eval_episodes, "Episodes in the final evaluation");
  sub->add_option("--out", a.out, "Output directory");
  sub->add_option("--config", a.config, "Replay a resolved counterfactual config.json");
}

ExperimentConfig resolve_counterfactual(const CounterfactualArgs& a) {
  ExperimentConfig cfg;
  if (!a.config.empty()) {
    if (!fs::exists(a.config)) fail("missing_file", "config '" + a.config + "' not found", 3);
    try {
      cfg = experiment_config_from_json(read_text_file(a.config));
    } catch (const std::invalid_argument& e) {
      fail("invalid_config", e.what(), 2);
    }
    if (!a.out.empty()) cfg.out_dir = a.out;
    if (cfg.out_dir.empty()) cfg.out_dir = default_out("counterfactual");
    return cfg;
  }
  if (a.env.empty() || a.checkpoint.empty() || !a.target) {
    fail("usage", "counterfactual requires --env, --checkpoint and --target (or --config)", 2);
  }
  const EnvId id = require_env(a.env);
  cfg.env_id = std::string(env_name(id));
  cfg.checkpoint = a.checkpoint;
  auto& c = cfg.counterpol;
  c = CounterpolConfig::defaults_for(id);
  c.gamma = 1.0;
  c.r_target = *a.target;
  if (a.delta) c.delta = *a.delta;
  if (a.k) c.k = *a.k;
  if (a.m) c.m = *a.m;
  if (a.n_episodes) c.n_episodes = *a.n_episodes;
  if (a.eta) c.eta = *a.eta;
  if (a.gamma) c.gamma = *a.gamma;
  if (a.max_outer_iters) c.max_outer_iters = *a.max_outer_iters;
  c.seed = a.seed;
  c.validate();
  if (a.eval_episodes < 1) fail("invalid_argument", "--eval-episodes must be positive", 2);
  cfg.eval_episodes = a.eval_episodes;
  cfg.out_dir = a.out.empty() ? default_out("counterfactual") : fs::path(a.out);
  return cfg;
}

/// runlog.csv, summary.json and cf_policy.txt for one finished cell.
void save_cell(const fs::path& dir, const std::string& env_id, const CellResult& cell,
               const std::string& provenance) {
  write_stream(dir / "runlog.csv", [&](std::ostream& s) { write_runlog_csv(s, cell.log); });
  RunSummary summary;
  summary.status = cell.log.status;
  summary.final_return = cell.j_cf_eval_mean;
  summary.final_return_std = cell.j_cf_eval_std;
  summary.kl_final = cell.kl_final;
  summary.outer_updates = cell.n_outer;
  summary.inner_updates = cell.n_inner;
  summary.total_episodes = cell.log.episodes;
  summary.wall_time_s = cell.log.wall_time_s;
  write_file(dir / "summary.json", run_summary_json(summary));

  Checkpoint ck;
  ck.env_id = env_id;
  ck.policy = cell.cf_policy;
  ck.meta.achieved_j = cell.j_cf_eval_mean;
  ck.meta.seed = static_cast<std::int64_t>(cell.seed);
  ck.meta.created_by = "counterpol counterfactual";
  ck.meta.provenance = provenance;
  write_file(dir / "cf_policy.txt", serialize_checkpoint(ck));
}

std::string cell_line(const CellResult& c) {
  std::ostringstream s;
  s << "status=" << to_string(c.log.status) << " n_outer=" << c.n_outer
    << " n_inner=" << c.n_inner << " J_eval=" << fmt("%.4f", c.j_cf_eval_mean)
    << " J_eval_std=" << fmt("%.4f", c.j_cf_eval_std) << " kl=" << fmt("%.6g", c.kl_final);
  return s.str();
}

int cmd_counterfactual(const CounterfactualArgs& a, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = resolve_counterfactual(a);
  const EnvId id = require_env(cfg.env_id);
  const Checkpoint original = load_for_env(cfg.checkpoint, id);
  write_file(cfg.out_dir / "config.json", experiment_config_to_json(cfg));

  const auto env = make_environment(id);
  const CellResult cell =
      run_counterfactual(*env, original.policy, original.meta.achieved_j.value_or(std::nan("")),
                         cfg.counterpol, cfg.eval_episodes);
  std::ostringstream prov;
  prov << "counterfactual from " << cfg.checkpoint.string() << " target=" << cfg.counterpol.r_target
       << " seed=" << cfg.counterpol.seed;
  save_cell(cfg.out_dir, cfg.env_id, cell, prov.str());
  out << cell_line(cell) << "\n";
  if (cell.log.status != RunStatus::kConverged) {
    err << "error: code=" << to_string(cell.log.status)
        << " message=search stopped without reaching the target\n";
    return 1;
  }
  return 0;
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
  std::string env;
  std::string checkpoint;
  int episodes = 100;
  std::uint64_t seed = 0;
  std::string trace;
};

void add_eval(CLI::App& app, EvalArgs& a) {
  auto* sub = app.add_subcommand("eval", "Evaluate a checkpoint's undiscounted return");
  sub->add_option("--env", a.env, "cartpole | acrobot | pendulum")->required();
  sub->add_option("--checkpoint", a.checkpoint, "Policy checkpoint")->required();
  sub->add_option("--episodes", a.episodes, "Number of episodes");
  sub->add_option("--seed", a.seed, "Seed of the first episode");
  sub->add_option("--trace", a.trace, "Write per-step trace CSV here");
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const EnvId id = require_env(a.env);
  if (a.episodes < 1) fail("invalid_argument", "--episodes must be positive", 2);
  const Checkpoint ck = load_for_env(a.checkpoint, id);
  const auto env = make_environment(id);
  const Batch batch =
      sample_episodes(*env, ck.policy, static_cast<std::size_t>(a.episodes), a.seed, 1.0);
  const ReturnStats stats = return_stats(batch);
  if (!a.trace.empty()) {
    write_stream(a.trace, [&](std::ostream& s) { write_trace_csv(s, batch); });
  }
  out << "mean=" << fmt("%.4f", stats.mean) << " std=" << fmt("%.4f", stats.std)
      << " episodes=" << a.episodes << "\n";
  return 0;
}

// ---- verify-equivalence ---------------------------------------------------

struct EquivalenceArgs {
  std::string env;
  std::string checkpoint;
  std::optional<double> k;
  int n_episodes = 10;
  int draws = 1;
  double perturbation = 0.01;
  std::uint64_t seed = 0;
};

void add_equivalence(CLI::App& app, EquivalenceArgs& a) {
  auto* sub = app.add_subcommand(
      "verify-equivalence", "Compare the counterfactual and trust-region update directions");
  sub->add_option("--env", a.env, "cartpole | acrobot | pendulum")->required();
  sub->add_option("--checkpoint", a.checkpoint, "Pivot policy checkpoint")->required();
  sub->add_option("--k", a.k, "KL weight (also the trust-region lambda)");
  sub->add_option("--n", a.n_episodes, "Episodes per shared batch");
  sub->add_option("--draws", a.draws, "Number of perturbed parameter draws");
  sub->add_option("--perturbation", a.perturbation, "Std of the parameter perturbation");
  sub->add_option("--seed", a.seed, "Seed");
}

int cmd_equivalence(const EquivalenceArgs& a, std::ostream& out, std::ostream& err) {
  const EnvId id = require_env(a.env);
  if (a.n_episodes < 1 || a.draws < 1) fail("invalid_argument", "--n and --draws must be positive", 2);
  const Checkpoint ck = load_for_env(a.checkpoint, id);
  const double k = a.k.value_or(CounterpolConfig::defaults_for(id).k);
  const auto env = make_environment(id);

  double worst = 0.0;
  bool all = true;
  for (int d = 0; d < a.draws; ++d) {
    Rng rng(derive_seed(a.seed, static_cast<std::uint64_t>(d)));
    std::normal_distribution<double> noise(0.0, a.perturbation);
    PolicyParams params = ck.policy;
    for (double& t : params.theta) t += noise(rng);
    const Batch batch =
        sample_episodes(*env, params, static_cast<std::size_t>(a.n_episodes),
                        derive_seed(a.seed, 0xba7c4000ULL + static_cast<std::uint64_t>(d)), 1.0);
    const EquivalenceReport r = verify_equivalence(ck.policy, params, batch, k);
    worst = std::max(worst, r.max_deviation);
    all = all && r.precondition_met && r.equivalent;
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s max_deviation=%.3e tolerance=%.0e draws=%d",
                all ? "PASS" : "FAIL", worst, kEquivalenceTolerance, a.draws);
  out << buf << "\n";
  if (!all) {
    err << "error: code=not_equivalent message=directions differ beyond tolerance\n";
    return 1;
  }
  return 0;
}

// ---- reproduce-table1 -----------------------------------------------------

struct Table1Args {
  std::string env;
  std::string out;
  std::uint64_t seed = 0;
  std::vector<std::string> checkpoints;
  std::optional<int> seeds;
  std::optional<int> max_outer_iters;
};

void add_table1(CLI::App& app, Table1Args& a) {
  auto* sub = app.add_subcommand("reproduce-table1",
                                 "Run the 3 originals x 3 targets x 3 seeds counterfactual grid");
  sub->add_option("--env", a.env, "cartpole | acrobot | pendulum")->required();
  sub->add_option("--out", a.out, "Output directory");
  sub->add_option("--seed", a.seed, "Base seed of the counterfactual runs");
  sub->add_option("--checkpoints", a.checkpoints, "Three original checkpoints (skips training)")
      ->delimiter(',');
  sub->add_option("--seeds", a.seeds, "Seeds per cell (default 3)");
  sub->add_option("--max-outer-iters", a.max_outer_iters, "Cap on pivot updates per run");
}

int cmd_table1(const Table1Args& a, std::ostream& out) {
  const EnvId id = require_env(a.env);
  const std::string env_id(env_name(id));
  Table1Setup setup = table1_setup(id);
  if (a.seeds) setup.seeds = *a.seeds;
  if (a.max_outer_iters) setup.counterpol.max_outer_iters = *a.max_outer_iters;
  if (setup.seeds < 1) fail("invalid_argument", "--seeds must be positive", 2);
  setup.counterpol.r_target = setup.targets.front();
  setup.counterpol.validate();
  const fs::path out_dir = a.out.empty() ? default_out("reproduce-table1") : fs::path(a.out);
  const std::size_t n_originals = setup.reference_levels.size();

  std::vector<OriginalPolicy> originals;
  std::vector<fs::path> original_paths;
  json resolved;
  resolved["env"] = env_id;
  resolved["base_seed"] = a.seed;
  resolved["seeds"] = setup.seeds;
  resolved["targets"] = setup.targets;
  resolved["eval_episodes"] = setup.eval_episodes;
  resolved["counterpol"] = json::parse(experiment_config_to_json(
      {env_id, {}, setup.counterpol, out_dir, setup.eval_episodes}))["counterpol"];
  resolved["counterpol"].erase("r_target");
  resolved["counterpol"].erase("seed");

  if (a.checkpoints.empty()) {
    TrainRunConfig tcfg{env_id, setup.trainer, out_dir / "originals"};
    resolved["trainer"] = json::parse(train_run_config_to_json(tcfg))["trainer"];
    write_file(out_dir / "config.json", resolved.dump(2) + "\n");
    out << "training originals (seed " << setup.trainer.seed << ")\n";
    const auto env = make_environment(id);
    const TrainingReport report = train_baseline(*env, setup.trainer);
    for (const auto& w : report.warnings) out << "warning: " << w << "\n";
    save_training(tcfg, report);
    originals = select_originals(report, n_originals);
    for (std::size_t i = 0; i < originals.size(); ++i) {
      TrainedCheckpoint c;
      c.params = originals[i].params;
      c.achieved_j = originals[i].j;
      const fs::path path = out_dir / "originals" / ("original_" + std::to_string(i) + ".txt");
      write_file(path, serialize_checkpoint(make_checkpoint(env_id, c, setup.trainer.seed)));
      original_paths.push_back(path);
    }
  } else {
    if (a.checkpoints.size() != n_originals) {
      fail("invalid_argument", "--checkpoints needs exactly " + std::to_string(n_originals) + " files", 2);
    }
    for (const auto& p : a.checkpoints) {
      const Checkpoint ck = load_for_env(p, id);
      double j = ck.meta.achieved_j.value_or(std::nan(""));
      if (!std::isfinite(j)) {
        const auto env = make_environment(id);
        j = evaluate_policy(*env, ck.policy, static_cast<std::size_t>(setup.eval_episodes), 0).mean;
      }
      originals.push_back({ck.policy, j});
      original_paths.push_back(p);
    }
    write_file(out_dir / "config.json", resolved.dump(2) + "\n");
  }
  for (std::size_t i = 0; i < originals.size(); ++i) {
    out << "original " << i << " J=" << fmt("%.4f", originals[i].j) << "\n";
  }

  // Cells are numbered in grid order: original, then target, then seed.
  std::size_t index = 0;
  const std::size_t per_original = setup.targets.size() * static_cast<std::size_t>(setup.seeds);
  const auto on_cell = [&](const CellResult& cell) {
    const std::size_t o = index / per_original;
    const std::size_t t = (index / static_cast<std::size_t>(setup.seeds)) % setup.targets.size();
    char name[64];
    std::snprintf(name, sizeof name, "o%zu_t%zu_s%llu", o, t,
                  static_cast<unsigned long long>(cell.seed));
    const fs::path dir = out_dir / "cells" / name;
    ExperimentConfig ecfg{env_id, original_paths[o], setup.counterpol, dir, setup.eval_episodes};
    ecfg.counterpol.r_target = cell.r_target;
    ecfg.counterpol.seed = cell.seed;
    write_file(dir / "config.json", experiment_config_to_json(ecfg));
    save_cell(dir, env_id, cell, std::string("reproduce-table1 cell ") + name);
    out << name << " J0=" << fmt("%.4f", cell.j_pi0) << " R=" << fmt("%.4g", cell.r_target) << " "
        << cell_line(cell) << "\n"
        << std::flush;
    ++index;
  };
  const auto cells = run_table1_grid(setup, originals, a.seed, on_cell);
  write_stream(out_dir / "table1.csv", [&](std::ostream& s) { write_table1_csv(s, cells); });
  out << "wrote " << (out_dir / "table1.csv").string() << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Counterfactual policy search for classic-control environments", "counterpol"};
  app.require_subcommand(1);
  TrainArgs train;
  CounterfactualArgs cf;
  EvalArgs eval;
  EquivalenceArgs equiv;
  Table1Args table1;
  add_train(app, train);
  add_counterfactual(app, cf);
  add_eval(app, eval);
  add_equivalence(app, equiv);
  add_table1(app, table1);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    for (char& ch : msg) {
      if (ch == '\n') ch = ' ';
    }
    err << "error: code=usage message=" << msg << "\n";
    return 2;
  }

  try {
    const auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "train") return cmd_train(train, out);
    if (name == "counterfactual") return cmd_counterfactual(cf, out, err);
    if (name == "eval") return cmd_eval(eval, out);
    if (name == "verify-equivalence") return cmd_equivalence(equiv, out, err);
    return cmd_table1(table1, out);
  } catch (const Failure& f) {
    err << "error: code=" << f.code << " message=" << f.message << "\n";
    return f.exit_code;
  } catch (const CheckpointError& e) {
    err << "error: code=checkpoint_" << to_string(e.kind()) << " message=" << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    err << "error: code=invalid_argument message=" << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: code=internal message=" << e.what() << "\n";
    return 1;
  }
}

}  // namespace counterpol::cli

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return counterpol::cli::run(args, std::cout, std::cerr);
}
