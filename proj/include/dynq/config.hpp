#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "agent.hpp"
#include "mdp.hpp"
#include "schedule.hpp"

namespace dynq {

/// Raised for unreadable, malformed, or invalid configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Which environment to build and with which parameters. Only the fields
/// relevant to the named family are consulted.
struct EnvConfig {
  std::string name = "DelayedChain";
  int n = 8;             // chain length
  double r_trap = 0.1;   // TrapChain exit reward
  int width = 3;         // SlipperyGrid shape
  int height = 3;
  double p_slip = 0.2;
  /// Episode step cutoff; 0 derives 10 * n_states.
  long horizon = 0;
};

struct RunConfig {
  long epochs = 50;
  long steps_per_epoch = 2000;
  long eval_steps = 1000;
  std::uint64_t seed = 0;
  std::string out_path = "metrics.csv";
  /// Evaluation score counted as solving the task; the bundled environments
  /// all pay exactly 1 per solved episode.
  double score_threshold = 1.0;
  /// Final network weights are written here when non-empty.
  std::string checkpoint_path;
};

struct ExperimentConfig {
  EnvConfig env;
  AgentConfig agent;
  ScheduleConfig schedule;
  RunConfig run;

  void validate() const;
};

inline EnvironmentSpec make_env(const EnvConfig& cfg) {
  if (cfg.name == "DelayedChain") return make_delayed_chain(cfg.n);
  if (cfg.name == "TrapChain") return make_trap_chain(cfg.n, cfg.r_trap);
  if (cfg.name == "SlipperyGrid")
    return make_slippery_grid(cfg.width, cfg.height, cfg.p_slip);
  throw ConfigError("unknown environment: " + cfg.name +
                    " (expected DelayedChain, TrapChain, or SlipperyGrid)");
}

inline void ExperimentConfig::validate() const {
  try {
    make_env(env);
    agent.validate();
    schedule.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (env.horizon < 0) throw ConfigError("env.horizon must be non-negative");
  if (run.epochs < 0) throw ConfigError("run.epochs must be non-negative");
  if (run.steps_per_epoch < 1)
    throw ConfigError("run.steps_per_epoch must be positive");
  if (run.eval_steps < 1) throw ConfigError("run.eval_steps must be positive");
  if (run.out_path.empty()) throw ConfigError("run.out_path must not be empty");
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline double parse_real(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    throw ConfigError("invalid number for " + key + ": '" + value + "'");
  }
  if (used != value.size())
    throw ConfigError("trailing characters in number for " + key + ": '" +
                      value + "'");
  return v;
}

inline long parse_int(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(value, &used);
  } catch (const std::exception&) {
    throw ConfigError("invalid integer for " + key + ": '" + value + "'");
  }
  if (used != value.size())
    throw ConfigError("trailing characters in integer for " + key + ": '" +
                      value + "'");
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  throw ConfigError("invalid boolean for " + key + ": '" + value + "'");
}

inline std::optional<double> parse_optional_real(const std::string& key,
                                                 const std::string& value) {
  if (value == "none") return std::nullopt;
  return parse_real(key, value);
}

inline std::vector<int> parse_int_list(const std::string& key,
                                       const std::string& value) {
  std::vector<int> out;
  if (value.empty() || value == "none") return out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty())
      throw ConfigError("empty element in list for " + key);
    out.push_back(static_cast<int>(parse_int(key, item)));
  }
  return out;
}

inline void apply_key(ExperimentConfig& cfg, const std::string& key,
                      const std::string& value) {
  // clang-format off
  if      (key == "env.name")        cfg.env.name = value;
  else if (key == "env.n")           cfg.env.n = static_cast<int>(parse_int(key, value));
  else if (key == "env.r_trap")      cfg.env.r_trap = parse_real(key, value);
  else if (key == "env.width")       cfg.env.width = static_cast<int>(parse_int(key, value));
  else if (key == "env.height")      cfg.env.height = static_cast<int>(parse_int(key, value));
  else if (key == "env.p_slip")      cfg.env.p_slip = parse_real(key, value);
  else if (key == "env.horizon")     cfg.env.horizon = parse_int(key, value);
  else if (key == "agent.hidden_sizes")    cfg.agent.hidden_sizes = parse_int_list(key, value);
  else if (key == "agent.replay_capacity") cfg.agent.replay_capacity = static_cast<std::size_t>(parse_int(key, value));
  else if (key == "agent.batch_size")      cfg.agent.batch_size = static_cast<std::size_t>(parse_int(key, value));
  else if (key == "agent.target_sync")     cfg.agent.target_sync_interval = parse_int(key, value);
  else if (key == "agent.learn_every")     cfg.agent.learn_every = parse_int(key, value);
  else if (key == "agent.warmup")          cfg.agent.warmup = static_cast<std::size_t>(parse_int(key, value));
  else if (key == "agent.td_clip")         cfg.agent.td_clip = parse_optional_real(key, value);
  else if (key == "agent.optimizer") {
    if (value == "sgd") cfg.agent.optimizer = OptimizerKind::SGD;
    else if (value == "rmsprop") cfg.agent.optimizer = OptimizerKind::RMSProp;
    else throw ConfigError("unknown optimizer: '" + value + "' (expected sgd or rmsprop)");
  }
  else if (key == "schedule.gamma0")           cfg.schedule.gamma0 = parse_real(key, value);
  else if (key == "schedule.gamma_factor")     cfg.schedule.gamma_factor = parse_real(key, value);
  else if (key == "schedule.gamma_cap")        cfg.schedule.gamma_cap = parse_optional_real(key, value);
  else if (key == "schedule.alpha0")           cfg.schedule.alpha0 = parse_real(key, value);
  else if (key == "schedule.alpha_factor")     cfg.schedule.alpha_factor = parse_real(key, value);
  else if (key == "schedule.eps_train0")       cfg.schedule.eps_train0 = parse_real(key, value);
  else if (key == "schedule.eps_test")         cfg.schedule.eps_test = parse_real(key, value);
  else if (key == "schedule.adaptive_eps")     cfg.schedule.adaptive_eps = parse_bool(key, value);
  else if (key == "schedule.window")           cfg.schedule.stagnation_window = static_cast<int>(parse_int(key, value));
  else if (key == "schedule.delta")            cfg.schedule.stagnation_delta = parse_real(key, value);
  else if (key == "schedule.boost")            cfg.schedule.eps_boost = parse_real(key, value);
  else if (key == "schedule.eps_min")          cfg.schedule.eps_min = parse_real(key, value);
  else if (key == "schedule.eps_max")          cfg.schedule.eps_max = parse_real(key, value);
  else if (key == "run.epochs")            cfg.run.epochs = parse_int(key, value);
  else if (key == "run.steps_per_epoch")   cfg.run.steps_per_epoch = parse_int(key, value);
  else if (key == "run.eval_steps")        cfg.run.eval_steps = parse_int(key, value);
  else if (key == "run.seed")              cfg.run.seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "run.out_path")          cfg.run.out_path = value;
  else if (key == "run.score_threshold")   cfg.run.score_threshold = parse_real(key, value);
  else if (key == "run.checkpoint_path")   cfg.run.checkpoint_path = value;
  else throw ConfigError("unknown configuration key: " + key);
  // clang-format on
}

}  // namespace detail

/// Parses `section.key = value` lines. Blank lines and lines starting with
/// '#' are skipped; unknown keys are rejected rather than ignored. The
/// result is validated as a whole.
inline ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::stringstream ss(text);
  std::string line;
  long line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const std::string stripped = detail::trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected 'key = value', got '" + stripped + "'");
    const std::string key = detail::trim(stripped.substr(0, eq));
    const std::string value = detail::trim(stripped.substr(eq + 1));
    if (key.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    detail::apply_key(cfg, key, value);
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

}  // namespace dynq
