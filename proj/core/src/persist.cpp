#include "counterpol/persist.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace counterpol {

namespace {

using json = nlohmann::json;
using Kind = CheckpointError::Kind;

std::string hex(double v) {
  std::ostringstream os;
  os << std::hexfloat << v;
  return os.str();
}

[[noreturn]] void parse_fail(const std::string& what) {
  throw CheckpointError(Kind::kParse, "checkpoint parse error: " + what);
}

double parse_double(std::string_view s, std::string_view key) {
  const std::string buf(s);
  char* end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);
  if (buf.empty() || end != buf.c_str() + buf.size()) {
    parse_fail("bad number for '" + std::string(key) + "': " + buf);
  }
  return v;
}

template <class Int>
Int parse_int(std::string_view s, std::string_view key) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    parse_fail("bad integer for '" + std::string(key) + "': " + std::string(s));
  }
  return v;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string_view to_string(CheckpointError::Kind kind) {
  switch (kind) {
    case Kind::kIo:
      return "io";
    case Kind::kParse:
      return "parse";
    case Kind::kVersionMismatch:
      return "version_mismatch";
    case Kind::kLengthMismatch:
      return "length_mismatch";
  }
  return "unknown";
}

std::string serialize_checkpoint(const Checkpoint& c) {
  const auto& arch = c.policy.arch;
  std::ostringstream os;
  os << "# counterpol policy checkpoint\n";
  os << "format_version = " << c.format_version << '\n';
  os << "env_id = " << c.env_id << '\n';
  os << "arch.obs_dim = " << arch.obs_dim << '\n';
  os << "arch.hidden_sizes =";
  for (auto h : arch.hidden_sizes) os << ' ' << h;
  os << '\n';
  os << "arch.activation = tanh\n";
  if (const auto* cat = std::get_if<CategoricalHead>(&arch.head)) {
    os << "arch.head = categorical\n";
    os << "arch.n_actions = " << cat->n_actions << '\n';
  } else {
    const auto& g = std::get<GaussianHead>(arch.head);
    os << "arch.head = gaussian\n";
    os << "arch.action_dim = " << g.action_dim << '\n';
    os << "arch.global_log_std = " << (g.global_log_std ? "true" : "false") << '\n';
  }
  if (c.meta.achieved_j) os << "meta.achieved_j = " << hex(*c.meta.achieved_j) << '\n';
  os << "meta.seed = " << c.meta.seed << '\n';
  os << "meta.created_by = " << c.meta.created_by << '\n';
  os << "meta.provenance = " << c.meta.provenance << '\n';
  if (c.meta.update_index) os << "meta.update_index = " << *c.meta.update_index << '\n';
  os << "theta.count = " << c.policy.theta.size() << '\n';
  os << "theta:\n";
  for (double v : c.policy.theta) os << hex(v) << '\n';
  os << "end\n";
  return os.str();
}

Checkpoint parse_checkpoint(std::string_view text) {
  std::map<std::string, std::string, std::less<>> kv;
  std::vector<double> theta;
  bool in_theta = false;
  bool saw_end = false;

  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    if (line.empty() || line.front() == '#') continue;
    if (saw_end) parse_fail("content after end marker");
    if (line == "end") {
      saw_end = true;
      continue;
    }
    if (in_theta) {
      theta.push_back(parse_double(line, "theta"));
      continue;
    }
    if (line == "theta:") {
      in_theta = true;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) parse_fail("expected 'key = value': " + std::string(line));
    kv.emplace(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
  }
  if (!saw_end) parse_fail("missing end marker (truncated file?)");

  auto get = [&](std::string_view key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) parse_fail("missing key '" + std::string(key) + "'");
    return it->second;
  };

  Checkpoint c;
  c.format_version = parse_int<int>(get("format_version"), "format_version");
  if (c.format_version != Checkpoint::kFormatVersion) {
    throw CheckpointError(Kind::kVersionMismatch,
                          "unsupported checkpoint format_version " +
                              std::to_string(c.format_version) + " (expected " +
                              std::to_string(Checkpoint::kFormatVersion) + ")");
  }
  c.env_id = get("env_id");

  auto& arch = c.policy.arch;
  arch.obs_dim = parse_int<std::size_t>(get("arch.obs_dim"), "arch.obs_dim");
  arch.hidden_sizes.clear();
  {
    std::istringstream hs(get("arch.hidden_sizes"));
    std::string tok;
    while (hs >> tok) arch.hidden_sizes.push_back(parse_int<std::size_t>(tok, "arch.hidden_sizes"));
  }
  if (const auto it = kv.find("arch.activation"); it != kv.end() && it->second != "tanh") {
    parse_fail("unsupported activation '" + it->second + "'");
  }
  const auto& head = get("arch.head");
  if (head == "categorical") {
    arch.head = CategoricalHead{parse_int<std::size_t>(get("arch.n_actions"), "arch.n_actions")};
  } else if (head == "gaussian") {
    const auto& global = get("arch.global_log_std");
    if (global != "true" && global != "false") parse_fail("arch.global_log_std must be true|false");
    arch.head = GaussianHead{parse_int<std::size_t>(get("arch.action_dim"), "arch.action_dim"),
                             global == "true"};
  } else {
    parse_fail("unknown head '" + head + "'");
  }
  try {
    arch.validate();
  } catch (const std::invalid_argument& e) {
    parse_fail(e.what());
  }

  if (const auto it = kv.find("meta.achieved_j"); it != kv.end()) {
    c.meta.achieved_j = parse_double(it->second, "meta.achieved_j");
  }
  if (const auto it = kv.find("meta.seed"); it != kv.end()) {
    c.meta.seed = parse_int<std::int64_t>(it->second, "meta.seed");
  }
  if (const auto it = kv.find("meta.created_by"); it != kv.end()) c.meta.created_by = it->second;
  if (const auto it = kv.find("meta.provenance"); it != kv.end()) c.meta.provenance = it->second;
  if (const auto it = kv.find("meta.update_index"); it != kv.end()) {
    c.meta.update_index = parse_int<int>(it->second, "meta.update_index");
  }

  const auto count = parse_int<std::size_t>(get("theta.count"), "theta.count");
  if (count != theta.size()) {
    parse_fail("theta.count says " + std::to_string(count) + " but " +
               std::to_string(theta.size()) + " values are present");
  }
  if (theta.size() != arch.param_count()) {
    throw CheckpointError(Kind::kLengthMismatch,
                          "architecture needs " + std::to_string(arch.param_count()) +
                              " parameters, checkpoint has " + std::to_string(theta.size()));
  }
  for (double v : theta) {
    if (!std::isfinite(v)) parse_fail("non-finite parameter");
  }
  c.policy.theta = std::move(theta);
  return c;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(Kind::kIo, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(Kind::kIo, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw CheckpointError(Kind::kIo, "write to '" + path.string() + "' failed");
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  write_text_file(path, serialize_checkpoint(c));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_text_file(path));
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  const auto& cp = cfg.counterpol;
  json j;
  j["env"] = cfg.env_id;
  j["checkpoint"] = cfg.checkpoint.string();
  j["out_dir"] = cfg.out_dir.string();
  j["eval_episodes"] = cfg.eval_episodes;
  j["counterpol"] = {
      {"r_target", cp.r_target}, {"delta", cp.delta},
      {"k", cp.k},               {"m", cp.m},
      {"n_episodes", cp.n_episodes}, {"eta", cp.eta},
      {"gamma", cp.gamma},       {"max_outer_iters", cp.max_outer_iters},
      {"seed", cp.seed},
  };
  return j.dump(2) + "\n";
}

ExperimentConfig experiment_config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    cfg.env_id = j.at("env").get<std::string>();
    const auto id = parse_env_id(cfg.env_id);
    if (!id) throw std::invalid_argument("config: unknown env '" + cfg.env_id + "'");
    cfg.checkpoint = j.at("checkpoint").get<std::string>();
    cfg.out_dir = j.value("out_dir", std::string{});
    cfg.eval_episodes = j.value("eval_episodes", 100);

    cfg.counterpol = CounterpolConfig::defaults_for(*id);
    const json& cp = j.at("counterpol");
    auto& c = cfg.counterpol;
    c.r_target = cp.at("r_target").get<double>();
    c.delta = cp.value("delta", c.delta);
    c.k = cp.value("k", c.k);
    c.m = cp.value("m", c.m);
    c.n_episodes = cp.value("n_episodes", c.n_episodes);
    c.eta = cp.value("eta", c.eta);
    c.gamma = cp.value("gamma", c.gamma);
    c.max_outer_iters = cp.value("max_outer_iters", c.max_outer_iters);
    c.seed = cp.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  cfg.counterpol.validate();
  if (!std::filesystem::exists(cfg.checkpoint)) {
    throw std::invalid_argument("config: checkpoint '" + cfg.checkpoint.string() +
                                "' does not exist");
  }
  return cfg;
}

std::string train_run_config_to_json(const TrainRunConfig& cfg) {
  const auto& t = cfg.trainer;
  json j;
  j["env"] = cfg.env_id;
  j["out_dir"] = cfg.out_dir.string();
  j["trainer"] = {
      {"total_updates", t.total_updates},
      {"n_episodes_per_update", t.n_episodes_per_update},
      {"eta_policy", t.eta_policy},
      {"eta_value", t.eta_value},
      {"gamma", t.gamma},
      {"checkpoint_levels", t.checkpoint_levels},
      {"stop_after_last_level", t.stop_after_last_level},
      {"normalize_advantages", t.normalize_advantages},
      {"rolling_window", t.rolling_window},
      {"eval_episodes", t.eval_episodes},
      {"hidden_sizes", t.hidden_sizes},
      {"seed", t.seed},
  };
  return j.dump(2) + "\n";
}

TrainRunConfig train_run_config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  TrainRunConfig cfg;
  try {
    cfg.env_id = j.at("env").get<std::string>();
    const auto id = parse_env_id(cfg.env_id);
    if (!id) throw std::invalid_argument("config: unknown env '" + cfg.env_id + "'");
    cfg.out_dir = j.value("out_dir", std::string{});
    auto& t = cfg.trainer;
    t = TrainerConfig::defaults_for(*id);
    const json tj = j.value("trainer", json::object());
    t.total_updates = tj.value("total_updates", t.total_updates);
    t.n_episodes_per_update = tj.value("n_episodes_per_update", t.n_episodes_per_update);
    t.eta_policy = tj.value("eta_policy", t.eta_policy);
    t.eta_value = tj.value("eta_value", t.eta_value);
    t.gamma = tj.value("gamma", t.gamma);
    t.checkpoint_levels = tj.value("checkpoint_levels", t.checkpoint_levels);
    t.stop_after_last_level = tj.value("stop_after_last_level", t.stop_after_last_level);
    t.normalize_advantages = tj.value("normalize_advantages", t.normalize_advantages);
    t.rolling_window = tj.value("rolling_window", t.rolling_window);
    t.eval_episodes = tj.value("eval_episodes", t.eval_episodes);
    t.hidden_sizes = tj.value("hidden_sizes", t.hidden_sizes);
    t.seed = tj.value("seed", t.seed);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  cfg.trainer.validate();
  return cfg;
}

void write_runlog_csv(std::ostream& out, const RunLog& log) {
  out << "outer_iter,inner_step,j_estimate,kl_estimate,return_penalty,grad_norm,pivot_updated\n";
  const auto old_precision = out.precision(17);
  for (const auto& r : log.records) {
    out << r.outer_iter << ',' << r.inner_step << ',' << r.j_estimate << ',' << r.kl_estimate
        << ',' << r.return_penalty << ',' << r.grad_norm << ',' << (r.pivot_updated ? 1 : 0)
        << '\n';
  }
  out.precision(old_precision);
}

std::string run_summary_json(const RunSummary& s) {
  json j;
  j["status"] = std::string(to_string(s.status));
  j["final_return"] = s.final_return;
  j["final_return_std"] = s.final_return_std;
  j["kl_final"] = s.kl_final;
  j["n_outer"] = s.outer_updates;
  j["n_inner"] = s.inner_updates;
  j["total_episodes"] = s.total_episodes;
  j["wall_time_s"] = s.wall_time_s;
  return j.dump(2) + "\n";
}

RunSummary run_summary_from_json(std::string_view text) {
  const json j = json::parse(text);
  RunSummary s;
  const auto status = j.at("status").get<std::string>();
  if (status == "converged") {
    s.status = RunStatus::kConverged;
  } else if (status == "non_finite_gradient") {
    s.status = RunStatus::kNonFiniteGradient;
  } else {
    s.status = RunStatus::kMaxItersExceeded;
  }
  s.final_return = j.at("final_return").get<double>();
  s.final_return_std = j.at("final_return_std").get<double>();
  s.kl_final = j.at("kl_final").get<double>();
  s.outer_updates = j.at("n_outer").get<int>();
  s.inner_updates = j.at("n_inner").get<int>();
  s.total_episodes = j.at("total_episodes").get<std::size_t>();
  s.wall_time_s = j.at("wall_time_s").get<double>();
  return s;
}

}  // namespace counterpol
