#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <sstream>

#include "counterpol/persist.hpp"
#include "support.hpp"

using namespace counterpol;
namespace fs = std::filesystem;

namespace {

Checkpoint sample_checkpoint(EnvId id = EnvId::kCartPole) {
  Checkpoint c;
  c.env_id = std::string(env_name(id));
  c.policy = init_params(default_arch(make_spec(id)), 9);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 1e3);
  for (auto& t : c.policy.theta) t += n(rng) * 1e-3;
  c.policy.theta[0] = std::numeric_limits<double>::denorm_min();
  c.policy.theta[1] = -0.1;
  c.meta.achieved_j = 235.6;
  c.meta.seed = -4;
  c.meta.created_by = "unit test";
  c.meta.provenance = "train env=cartpole seed=2 update=40 level=235";
  c.meta.update_index = 40;
  return c;
}

fs::path temp_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("counterpol_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

CheckpointError::Kind kind_of(const std::string& text) {
  try {
    parse_checkpoint(text);
  } catch (const CheckpointError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected a CheckpointError";
  return CheckpointError::Kind::kIo;
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  return s.replace(pos, from.size(), to);
}

}  // namespace

TEST(Checkpoint, RoundTripIsBitExact) {
  for (auto id : {EnvId::kCartPole, EnvId::kPendulum}) {
    const auto c = sample_checkpoint(id);
    const auto dir = temp_dir("roundtrip");
    save_checkpoint(dir / "c.txt", c);
    const auto back = load_checkpoint(dir / "c.txt");
    EXPECT_EQ(back.format_version, Checkpoint::kFormatVersion);
    EXPECT_EQ(back.env_id, c.env_id);
    EXPECT_EQ(back.policy.arch, c.policy.arch);
    ASSERT_EQ(back.policy.theta.size(), c.policy.theta.size());
    for (std::size_t i = 0; i < c.policy.theta.size(); ++i) {
      EXPECT_EQ(std::bit_cast<std::uint64_t>(back.policy.theta[i]),
                std::bit_cast<std::uint64_t>(c.policy.theta[i]));
    }
    EXPECT_EQ(back.meta.achieved_j, c.meta.achieved_j);
    EXPECT_EQ(back.meta.seed, c.meta.seed);
    EXPECT_EQ(back.meta.created_by, c.meta.created_by);
    EXPECT_EQ(back.meta.provenance, c.meta.provenance);
    EXPECT_EQ(back.meta.update_index, c.meta.update_index);
    EXPECT_EQ(serialize_checkpoint(back), serialize_checkpoint(c));
  }
}

TEST(Checkpoint, NonGlobalGaussianHeadRoundTrips) {
  Checkpoint c;
  c.env_id = "pendulum";
  c.policy = init_params(PolicyArch{3, {4}, GaussianHead{1, false}}, 2);
  const auto back = parse_checkpoint(serialize_checkpoint(c));
  EXPECT_EQ(back.policy.arch, c.policy.arch);
  EXPECT_EQ(back.policy.theta, c.policy.theta);
  EXPECT_FALSE(back.meta.achieved_j.has_value());
}

TEST(Checkpoint, TruncatedFileIsParseError) {
  const auto text = serialize_checkpoint(sample_checkpoint());
  for (std::size_t cut : {std::size_t{0}, std::size_t{10}, text.size() / 3, text.size() / 2,
                          text.size() - 5}) {
    EXPECT_EQ(kind_of(text.substr(0, cut)), CheckpointError::Kind::kParse) << cut;
  }
}

TEST(Checkpoint, GarbageIsParseError) {
  EXPECT_EQ(kind_of("hello world\n"), CheckpointError::Kind::kParse);
  const auto text = serialize_checkpoint(sample_checkpoint());
  EXPECT_EQ(kind_of(replace(text, "arch.head = categorical", "arch.head = softmax")),
            CheckpointError::Kind::kParse);
  EXPECT_EQ(kind_of(replace(text, "arch.activation = tanh", "arch.activation = relu")),
            CheckpointError::Kind::kParse);
}

TEST(Checkpoint, LengthMismatch) {
  auto c = sample_checkpoint();
  c.policy.theta.pop_back();
  // Serializing is allowed; loading validates against the architecture.
  EXPECT_EQ(kind_of(serialize_checkpoint(c)), CheckpointError::Kind::kLengthMismatch);
}

TEST(Checkpoint, VersionMismatch) {
  const auto text = serialize_checkpoint(sample_checkpoint());
  EXPECT_EQ(kind_of(replace(text, "format_version = 1", "format_version = 2")),
            CheckpointError::Kind::kVersionMismatch);
}

TEST(Checkpoint, MissingFileIsIoError) {
  try {
    load_checkpoint("/nonexistent/dir/ckpt.txt");
    FAIL();
  } catch (const CheckpointError& e) {
    EXPECT_EQ(e.kind(), CheckpointError::Kind::kIo);
  }
}

TEST(Checkpoint, ErrorKindNames) {
  EXPECT_EQ(to_string(CheckpointError::Kind::kIo), "io");
  EXPECT_EQ(to_string(CheckpointError::Kind::kParse), "parse");
  EXPECT_EQ(to_string(CheckpointError::Kind::kVersionMismatch), "version_mismatch");
  EXPECT_EQ(to_string(CheckpointError::Kind::kLengthMismatch), "length_mismatch");
}

TEST(ExperimentConfig, JsonRoundTrip) {
  const auto dir = temp_dir("config");
  save_checkpoint(dir / "c.txt", sample_checkpoint());
  ExperimentConfig cfg;
  cfg.env_id = "cartpole";
  cfg.checkpoint = dir / "c.txt";
  cfg.out_dir = dir / "out";
  cfg.counterpol = CounterpolConfig::defaults_for(EnvId::kCartPole);
  cfg.counterpol.r_target = 450;
  cfg.counterpol.eta = 0.1 + 0.2;  // not exactly representable in short decimal
  cfg.counterpol.seed = 123456789012345ULL;
  const auto back = experiment_config_from_json(experiment_config_to_json(cfg));
  EXPECT_EQ(back.env_id, cfg.env_id);
  EXPECT_EQ(back.checkpoint, cfg.checkpoint);
  EXPECT_EQ(back.out_dir, cfg.out_dir);
  EXPECT_EQ(back.counterpol.eta, cfg.counterpol.eta);
  EXPECT_EQ(back.counterpol.r_target, 450.0);
  EXPECT_EQ(back.counterpol.seed, cfg.counterpol.seed);
  EXPECT_EQ(back.counterpol.k, 10.0);
  EXPECT_EQ(experiment_config_to_json(back), experiment_config_to_json(cfg));
}

TEST(ExperimentConfig, DefaultsAndErrors) {
  const auto dir = temp_dir("config_defaults");
  save_checkpoint(dir / "c.txt", sample_checkpoint());
  const std::string ck = (dir / "c.txt").string();
  const auto cfg = experiment_config_from_json(R"({"env":"acrobot","checkpoint":")" + ck +
                                               R"(","counterpol":{"r_target":-100}})");
  EXPECT_EQ(cfg.counterpol.delta, 2.5);
  EXPECT_EQ(cfg.counterpol.k, 1.0);
  EXPECT_EQ(cfg.eval_episodes, 100);
  EXPECT_THROW(experiment_config_from_json("{"), std::invalid_argument);
  EXPECT_THROW(experiment_config_from_json(R"({"env":"mars","checkpoint":")" + ck +
                                           R"(","counterpol":{"r_target":1}})"),
               std::invalid_argument);
  EXPECT_THROW(experiment_config_from_json(
                   R"({"env":"cartpole","checkpoint":"/nope.txt","counterpol":{"r_target":1}})"),
               std::invalid_argument);
  EXPECT_THROW(experiment_config_from_json(R"({"env":"cartpole","checkpoint":")" + ck +
                                           R"(","counterpol":{"r_target":1,"delta":0}})"),
               std::invalid_argument);
}

TEST(TrainRunConfig, JsonRoundTrip) {
  TrainRunConfig cfg{"pendulum", TrainerConfig::defaults_for(EnvId::kPendulum), "out"};
  cfg.trainer.seed = 99;
  const auto back = train_run_config_from_json(train_run_config_to_json(cfg));
  EXPECT_EQ(back.env_id, "pendulum");
  EXPECT_EQ(back.trainer.checkpoint_levels, cfg.trainer.checkpoint_levels);
  EXPECT_EQ(back.trainer.gamma, cfg.trainer.gamma);
  EXPECT_TRUE(back.trainer.normalize_advantages);
  EXPECT_EQ(back.trainer.seed, 99u);
  EXPECT_EQ(train_run_config_to_json(back), train_run_config_to_json(cfg));
}

TEST(RunLogCsv, OneRowPerRecord) {
  RunLog log;
  log.records.push_back({0, 0, 20.5, 0.0, 29.5, 1.25, false});
  log.records.push_back({0, 1, 45.0, 0.01, 5.0, 0.0, true});
  std::ostringstream out;
  write_runlog_csv(out, log);
  EXPECT_EQ(out.str(),
            "outer_iter,inner_step,j_estimate,kl_estimate,return_penalty,grad_norm,pivot_updated\n"
            "0,0,20.5,0,29.5,1.25,0\n"
            "0,1,45,0.01,5,0,1\n");
}

TEST(RunSummary, JsonRoundTrip) {
  RunSummary s;
  s.status = RunStatus::kConverged;
  s.final_return = 245.03;
  s.final_return_std = 12.5;
  s.kl_final = 0.0123;
  s.outer_updates = 3;
  s.inner_updates = 34;
  s.total_episodes = 350;
  s.wall_time_s = 1.5;
  const auto back = run_summary_from_json(run_summary_json(s));
  EXPECT_EQ(back.status, s.status);
  EXPECT_EQ(back.final_return, s.final_return);
  EXPECT_EQ(back.outer_updates, 3);
  EXPECT_EQ(back.inner_updates, 34);
  EXPECT_EQ(back.total_episodes, 350u);
  EXPECT_NE(run_summary_json(s).find("\"n_outer\": 3"), std::string::npos);
}
