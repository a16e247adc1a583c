#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <vector>

#include "exact_dp.hpp"
#include "mdp.hpp"
#include "network.hpp"
#include "optimizer.hpp"
#include "replay.hpp"
#include "rng.hpp"

namespace dynq {

/// Structural settings of the learner. Hyperparameters that change during
/// training (discount, step size, exploration) live in Hyperparams instead.
struct AgentConfig {
  /// Hidden layer widths; empty gives a linear network, which makes the
  /// learner an exact tabular update on one-hot inputs.
  std::vector<int> hidden_sizes = {24, 24};
  std::size_t replay_capacity = 10000;
  std::size_t batch_size = 32;
  /// Steps between copies of the online parameters into the target network.
  long target_sync_interval = 500;
  /// Update every this many steps; 0 disables learning entirely.
  long learn_every = 4;
  /// Minimum transitions collected before updates start.
  std::size_t warmup = 500;
  /// Symmetric clip applied to the TD error before the gradient product;
  /// absent disables clipping.
  std::optional<double> td_clip = 1.0;
  OptimizerKind optimizer = OptimizerKind::RMSProp;

  void validate() const {
    for (int h : hidden_sizes)
      if (h < 1) throw std::invalid_argument("hidden sizes must be positive");
    if (replay_capacity < 1)
      throw std::invalid_argument("replay capacity must be at least 1");
    if (batch_size < 1 || batch_size > replay_capacity)
      throw std::invalid_argument("batch size must lie in [1, replay capacity]");
    if (target_sync_interval < 1)
      throw std::invalid_argument("target sync interval must be at least 1");
    if (learn_every < 0)
      throw std::invalid_argument("learn_every must be non-negative");
    if (td_clip && !(*td_clip > 0.0))
      throw std::invalid_argument("TD clip must be positive when present");
  }
};

/// Hyperparameters read live by the training step. The harness refreshes
/// them from the schedule at epoch boundaries.
struct Hyperparams {
  double gamma = 0.95;
  double alpha = 0.005;
  double epsilon = 0.1;
};

/// What one environment step of training did, for bookkeeping by the caller.
struct StepLog {
  Transition transition;
  bool learned = false;
  bool episode_ended = false;
  /// Undiscounted return and length of the episode that just ended.
  double episode_return = 0.0;
  long episode_length = 0;
};

/// Epsilon-greedy action choice on a vector of action values: with
/// probability epsilon a uniformly random action, otherwise the greedy one
/// with ties resolved to the lowest index.
inline int select_action(const std::vector<double>& q_values, double epsilon,
                         Rng& rng) {
  if (q_values.empty()) throw std::invalid_argument("empty action-value vector");
  const int n = static_cast<int>(q_values.size());
  if (next_canonical(rng) < epsilon) return next_index(rng, n);
  int best = 0;
  for (int a = 1; a < n; ++a)
    if (q_values[static_cast<std::size_t>(a)] >
        q_values[static_cast<std::size_t>(best)])
      best = a;
  return best;
}

namespace detail {

inline void compute_targets_into(const std::vector<Transition>& batch,
                                 const NetworkParams& target_params,
                                 double gamma, std::vector<double>& targets,
                                 std::vector<double>& obs,
                                 NetworkWorkspace& ws) {
  targets.clear();
  targets.reserve(batch.size());
  for (const Transition& t : batch) {
    double y = t.reward;
    if (!t.terminal) {
      obs[static_cast<std::size_t>(t.next_state)] = 1.0;
      forward_into(target_params, obs, ws);
      obs[static_cast<std::size_t>(t.next_state)] = 0.0;
      const std::vector<double>& q = ws.activations.back();
      y += gamma * *std::max_element(q.begin(), q.end());
    }
    targets.push_back(y);
  }
}

}  // namespace detail

/// Bootstrap targets for a batch, computed entirely from the frozen target
/// parameters: y = r + gamma * max_a' Q(s', a'; target), or y = r alone on
/// terminal transitions.
inline std::vector<double> compute_targets(const std::vector<Transition>& batch,
                                           const NetworkParams& target_params,
                                           double gamma) {
  std::vector<double> targets;
  std::vector<double> obs(static_cast<std::size_t>(target_params.input_dim()), 0.0);
  NetworkWorkspace ws;
  detail::compute_targets_into(batch, target_params, gamma, targets, obs, ws);
  return targets;
}

/// Everything the learner owns: online and target networks, replay memory,
/// optimizer state, the position in the environment, and step counters.
struct AgentState {
  EnvironmentSpec env;
  AgentConfig config;
  Hyperparams hyper;
  NetworkParams params;
  NetworkParams target_params;
  ReplayMemory memory;
  OptimizerState opt;
  long steps_done = 0;

  /// Episode bookkeeping; episodes are cut off at horizon steps.
  int current_state = 0;
  long episode_steps = 0;
  double episode_return = 0.0;
  long horizon = 0;

  // Reusable buffers for the hot path.
  NetworkWorkspace ws;
  GradientSet grad;
  std::vector<Transition> batch;
  std::vector<double> targets;
  std::vector<double> obs;
  std::vector<double> q_values;

  AgentState(EnvironmentSpec env_spec, AgentConfig cfg, long episode_horizon,
             std::uint64_t seed)
      : env(std::move(env_spec)),
        config(std::move(cfg)),
        memory(config.replay_capacity) {
    config.validate();
    validate_spec(env);
    if (episode_horizon < 1)
      throw std::invalid_argument("episode horizon must be at least 1");
    std::vector<int> sizes;
    sizes.push_back(env.n_states);
    for (int h : config.hidden_sizes) sizes.push_back(h);
    sizes.push_back(env.n_actions);
    params = init_network(sizes, mix_seed(seed, 0));
    target_params = params;
    opt.kind = config.optimizer;
    grad = zeros_like(params);
    obs.assign(static_cast<std::size_t>(env.n_states), 0.0);
    horizon = episode_horizon;
    current_state = env.start_state;
  }
};

/// Copies the online parameters into the target network.
inline void sync_target(AgentState& agent) {
  agent.target_params = agent.params;
}

/// One interaction-plus-learning step:
///   1. epsilon-greedy action at the current state from the online network
///   2. environment step
///   3. push the transition into replay (horizon cutoffs are stored
///      non-terminal: the episode ends but the state does not)
///   4. start a new episode if this one ended
///   5. on learning steps (and once past warmup), sample a batch, build
///      targets from the frozen target network, and apply the mean clipped
///      TD gradient with the current step size
///   6. periodically copy the online network into the target network
///   7. advance the step counter
inline StepLog train_step(AgentState& agent, Rng& rng) {
  StepLog log;
  const AgentConfig& cfg = agent.config;

  agent.obs[static_cast<std::size_t>(agent.current_state)] = 1.0;
  detail::forward_into(agent.params, agent.obs, agent.ws);
  agent.obs[static_cast<std::size_t>(agent.current_state)] = 0.0;
  agent.q_values = agent.ws.activations.back();
  const int action = select_action(agent.q_values, agent.hyper.epsilon, rng);

  const StepResult step = env_step(agent.env, agent.current_state, action, rng);
  agent.episode_return += step.reward;
  agent.episode_steps += 1;
  const bool horizon_cut =
      !step.terminal && agent.episode_steps >= agent.horizon;

  log.transition = {agent.current_state, action, step.reward, step.next_state,
                    step.terminal};
  agent.memory.push(log.transition);

  if (step.terminal || horizon_cut) {
    log.episode_ended = true;
    log.episode_return = agent.episode_return;
    log.episode_length = agent.episode_steps;
    agent.current_state = agent.env.start_state;
    agent.episode_steps = 0;
    agent.episode_return = 0.0;
  } else {
    agent.current_state = step.next_state;
  }

  const std::size_t need = std::max(cfg.warmup, cfg.batch_size);
  if (cfg.learn_every > 0 && agent.steps_done % cfg.learn_every == 0 &&
      agent.memory.size() >= need) {
    agent.memory.sample(cfg.batch_size, rng, agent.batch);
    detail::compute_targets_into(agent.batch, agent.target_params,
                                 agent.hyper.gamma, agent.targets, agent.obs,
                                 agent.ws);
    agent.grad.fill(0.0);
    const double w = 1.0 / static_cast<double>(agent.batch.size());
    for (std::size_t i = 0; i < agent.batch.size(); ++i) {
      const Transition& t = agent.batch[i];
      agent.obs[static_cast<std::size_t>(t.state)] = 1.0;
      td_gradient_into(agent.params, agent.obs, t.action, agent.targets[i],
                       cfg.td_clip, w, agent.grad, agent.ws);
      agent.obs[static_cast<std::size_t>(t.state)] = 0.0;
    }
    apply_update(agent.params, agent.grad, agent.hyper.alpha, agent.opt);
    log.learned = true;
  }

  if (agent.steps_done % cfg.target_sync_interval == 0) sync_target(agent);

  agent.steps_done += 1;
  return log;
}

/// Greedy action values of the online network as a table, for comparison
/// against the exact solver.
inline QTable q_table_of(const NetworkParams& params,
                         const EnvironmentSpec& spec) {
  QTable table = QTable::zeros(spec.n_states, spec.n_actions);
  std::vector<double> obs(static_cast<std::size_t>(spec.n_states), 0.0);
  NetworkWorkspace ws;
  for (int s = 0; s < spec.n_states; ++s) {
    obs[static_cast<std::size_t>(s)] = 1.0;
    detail::forward_into(params, obs, ws);
    obs[static_cast<std::size_t>(s)] = 0.0;
    for (int a = 0; a < spec.n_actions; ++a)
      table.at(s, a) = ws.activations.back()[static_cast<std::size_t>(a)];
  }
  return table;
}

}  // namespace dynq
