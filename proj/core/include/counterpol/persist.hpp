#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "counterpol/counterpol.hpp"
#include "counterpol/policy.hpp"
#include "counterpol/trainer.hpp"

namespace counterpol {

struct CheckpointMeta {
  std::optional<double> achieved_j;
  std::int64_t seed = 0;
  std::string created_by;
  std::string provenance;
  std::optional<int> update_index;
};

/// Text checkpoint: one `key = value` pair per line, parameters as
/// hexadecimal floats (exact round trip). See docs/checkpoint_format.md.
struct Checkpoint {
  static constexpr int kFormatVersion = 1;

  int format_version = kFormatVersion;
  std::string env_id;
  PolicyParams policy;
  CheckpointMeta meta;
};

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { kIo, kParse, kVersionMismatch, kLengthMismatch };

  CheckpointError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::string_view to_string(CheckpointError::Kind kind);

std::string serialize_checkpoint(const Checkpoint& c);
Checkpoint parse_checkpoint(std::string_view text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Everything needed to replay one counterfactual run.
struct ExperimentConfig {
  std::string env_id;
  std::filesystem::path checkpoint;
  CounterpolConfig counterpol;
  std::filesystem::path out_dir;
  int eval_episodes = 100;
};

std::string experiment_config_to_json(const ExperimentConfig& cfg);
/// Missing optional fields fall back to the environment defaults; throws
/// std::invalid_argument on malformed documents or a missing checkpoint.
ExperimentConfig experiment_config_from_json(std::string_view text);

struct TrainRunConfig {
  std::string env_id;
  TrainerConfig trainer;
  std::filesystem::path out_dir;
};

std::string train_run_config_to_json(const TrainRunConfig& cfg);
/// Missing trainer fields fall back to TrainerConfig::defaults_for(env).
TrainRunConfig train_run_config_from_json(std::string_view text);

/// One row per recorded update.
void write_runlog_csv(std::ostream& out, const RunLog& log);

struct RunSummary {
  RunStatus status = RunStatus::kMaxItersExceeded;
  double final_return = 0.0;  // evaluation mean, undiscounted
  double final_return_std = 0.0;
  double kl_final = 0.0;
  int outer_updates = 0;
  int inner_updates = 0;
  std::size_t total_episodes = 0;
  double wall_time_s = 0.0;
};

std::string run_summary_json(const RunSummary& s);
RunSummary run_summary_from_json(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace counterpol
