#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "rng.hpp"

namespace dynq {

/// One possible result of taking an action: successor state, its probability,
/// the reward collected on the way, and whether the episode ends here.
struct Outcome {
  int next_state = 0;
  double probability = 0.0;
  double reward = 0.0;
  bool terminal = false;
};

/// Tabular description of a finite MDP. Transition probabilities for every
/// (state, action) pair must sum to one; dynamics are immutable after
/// construction so specs can be shared freely between agent and planner.
struct EnvironmentSpec {
  std::string name;
  int n_states = 0;
  int n_actions = 0;
  int start_state = 0;
  /// outcomes[s][a] lists every possible result of action a in state s.
  std::vector<std::vector<std::vector<Outcome>>> outcomes;
  /// States in which no further action may be taken.
  std::vector<bool> terminal_state;

  const std::vector<Outcome>& outcomes_for(int state, int action) const {
    return outcomes.at(static_cast<std::size_t>(state))
        .at(static_cast<std::size_t>(action));
  }

  /// Largest absolute reward reachable in one step; bounds value magnitudes.
  double max_abs_reward() const {
    double r = 0.0;
    for (const auto& per_state : outcomes)
      for (const auto& per_action : per_state)
        for (const Outcome& o : per_action) r = std::max(r, std::abs(o.reward));
    return r;
  }
};

/// One experienced step, as stored in replay memory.
struct Transition {
  int state = 0;
  int action = 0;
  double reward = 0.0;
  int next_state = 0;
  bool terminal = false;
};

/// Result of sampling the environment once.
struct StepResult {
  int next_state = 0;
  double reward = 0.0;
  bool terminal = false;
};

/// Network input encoding of a state (one-hot).
using Observation = std::vector<double>;

/// Checks the structural invariants of a spec. Throws std::invalid_argument
/// describing the first violation found.
inline void validate_spec(const EnvironmentSpec& spec) {
  if (spec.n_states < 1 || spec.n_actions < 1)
    throw std::invalid_argument("environment needs at least one state and action");
  if (spec.outcomes.size() != static_cast<std::size_t>(spec.n_states) ||
      spec.terminal_state.size() != static_cast<std::size_t>(spec.n_states))
    throw std::invalid_argument("environment tables disagree with n_states");
  if (spec.start_state < 0 || spec.start_state >= spec.n_states)
    throw std::invalid_argument("start state out of range");
  if (spec.terminal_state[static_cast<std::size_t>(spec.start_state)])
    throw std::invalid_argument("start state must not be terminal");
  for (int s = 0; s < spec.n_states; ++s) {
    if (spec.outcomes[static_cast<std::size_t>(s)].size() !=
        static_cast<std::size_t>(spec.n_actions))
      throw std::invalid_argument("action list size mismatch in state " +
                                  std::to_string(s));
    if (spec.terminal_state[static_cast<std::size_t>(s)]) continue;
    for (int a = 0; a < spec.n_actions; ++a) {
      const auto& outs = spec.outcomes_for(s, a);
      if (outs.empty())
        throw std::invalid_argument("no outcomes for state " + std::to_string(s) +
                                    " action " + std::to_string(a));
      double total = 0.0;
      for (const Outcome& o : outs) {
        if (o.next_state < 0 || o.next_state >= spec.n_states)
          throw std::invalid_argument("successor state out of range");
        if (o.probability < 0.0 || o.probability > 1.0)
          throw std::invalid_argument("outcome probability outside [0, 1]");
        // Landing in a terminal state must end the episode; the converse is
        // allowed (an episode may end on a transition into an ordinary state,
        // e.g. an absorbing trap exit).
        if (spec.terminal_state[static_cast<std::size_t>(o.next_state)] &&
            !o.terminal)
          throw std::invalid_argument(
              "transition into a terminal state must be flagged terminal");
        total += o.probability;
      }
      if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("outcome probabilities for state " +
                                    std::to_string(s) + " action " +
                                    std::to_string(a) + " do not sum to 1");
    }
  }
}

namespace detail {

inline EnvironmentSpec make_chain_base(const std::string& name, int n) {
  if (n < 2)
    throw std::invalid_argument(name + " needs at least 2 states, got " +
                                std::to_string(n));
  EnvironmentSpec spec;
  spec.name = name;
  spec.n_states = n;
  spec.n_actions = 2;  // 0 = left, 1 = right
  spec.start_state = 0;
  // Terminal states keep empty action lists; every state still has one list
  // per action so outcomes[s][a] is indexable everywhere.
  spec.outcomes.assign(static_cast<std::size_t>(n),
                       std::vector<std::vector<Outcome>>(2));
  spec.terminal_state.assign(static_cast<std::size_t>(n), false);
  spec.terminal_state[static_cast<std::size_t>(n - 1)] = true;
  for (int s = 0; s < n - 1; ++s) {
    const bool goal_next = (s + 1 == n - 1);
    spec.outcomes[static_cast<std::size_t>(s)] = {
        // left: one step back, clamped at the start
        {{std::max(s - 1, 0), 1.0, 0.0, false}},
        // right: one step forward, reward 1 on reaching the far end
        {{s + 1, 1.0, goal_next ? 1.0 : 0.0, goal_next}}};
  }
  return spec;
}

}  // namespace detail

/// Chain of n states. Only reaching the far end pays (reward 1, terminal);
/// every other move is free. The single reward is n-1 steps from the start,
/// which makes learning speed very sensitive to the discount factor.
inline EnvironmentSpec make_delayed_chain(int n) {
  EnvironmentSpec spec = detail::make_chain_base("DelayedChain", n);
  validate_spec(spec);
  return spec;
}

/// DelayedChain plus a local optimum: moving left at the start ends the
/// episode immediately with a small reward r_trap. A greedy agent that finds
/// the trap first has little incentive to keep exploring toward the far end.
inline EnvironmentSpec make_trap_chain(int n, double r_trap) {
  EnvironmentSpec spec = detail::make_chain_base("TrapChain", n);
  spec.outcomes[0][0] = {{0, 1.0, r_trap, true}};
  validate_spec(spec);
  return spec;
}

/// width x height grid, row-major states, start in one corner and a single
/// terminal reward in the opposite corner. Four move actions (up, down, left,
/// right); with probability p_slip the agent moves in a uniformly random
/// direction instead. Moving into a wall leaves the position unchanged.
inline EnvironmentSpec make_slippery_grid(int width, int height, double p_slip) {
  if (width < 1 || height < 1 || width * height < 2)
    throw std::invalid_argument("SlipperyGrid needs at least 2 cells");
  if (!(p_slip >= 0.0 && p_slip <= 1.0))
    throw std::invalid_argument("slip probability must lie in [0, 1]");
  EnvironmentSpec spec;
  spec.name = "SlipperyGrid";
  spec.n_states = width * height;
  spec.n_actions = 4;  // 0 = up, 1 = down, 2 = left, 3 = right
  spec.start_state = 0;
  const int goal = width * height - 1;
  spec.outcomes.assign(static_cast<std::size_t>(spec.n_states),
                       std::vector<std::vector<Outcome>>(4));
  spec.terminal_state.assign(static_cast<std::size_t>(spec.n_states), false);
  spec.terminal_state[static_cast<std::size_t>(goal)] = true;

  const int dx[4] = {0, 0, -1, 1};
  const int dy[4] = {-1, 1, 0, 0};
  auto moved = [&](int s, int dir) {
    const int x = std::clamp(s % width + dx[dir], 0, width - 1);
    const int y = std::clamp(s / width + dy[dir], 0, height - 1);
    return y * width + x;
  };

  for (int s = 0; s < spec.n_states; ++s) {
    if (spec.terminal_state[static_cast<std::size_t>(s)]) continue;
    for (int a = 0; a < 4; ++a) {
      // Direction dir is taken with probability p_slip/4, plus 1-p_slip when
      // it is the intended one. Outcomes landing in the same cell are merged.
      std::vector<Outcome>& outs = spec.outcomes[s][a];
      for (int dir = 0; dir < 4; ++dir) {
        const double p = p_slip / 4.0 + (dir == a ? 1.0 - p_slip : 0.0);
        if (p == 0.0) continue;
        const int t = moved(s, dir);
        auto same = std::find_if(outs.begin(), outs.end(),
                                 [&](const Outcome& o) { return o.next_state == t; });
        if (same != outs.end()) {
          same->probability += p;
        } else {
          outs.push_back({t, p, t == goal ? 1.0 : 0.0, t == goal});
        }
      }
    }
  }
  validate_spec(spec);
  return spec;
}

/// Samples one environment step. The caller must not act in terminal states.
inline StepResult env_step(const EnvironmentSpec& spec, int state, int action,
                           Rng& rng) {
  if (state < 0 || state >= spec.n_states)
    throw std::invalid_argument("state out of range");
  if (action < 0 || action >= spec.n_actions)
    throw std::invalid_argument("action out of range");
  if (spec.terminal_state[static_cast<std::size_t>(state)])
    throw std::logic_error("cannot act in a terminal state");
  const auto& outs = spec.outcomes_for(state, action);
  const double u = next_canonical(rng);
  double cum = 0.0;
  for (const Outcome& o : outs) {
    cum += o.probability;
    if (u < cum) return {o.next_state, o.reward, o.terminal};
  }
  // Guard against accumulated rounding in the cumulative sum.
  const Outcome& last = outs.back();
  return {last.next_state, last.reward, last.terminal};
}

/// One-hot encoding of a state for the network input.
inline Observation encode_state(int state, int n_states) {
  if (state < 0 || state >= n_states)
    throw std::invalid_argument("state out of range");
  Observation obs(static_cast<std::size_t>(n_states), 0.0);
  obs[static_cast<std::size_t>(state)] = 1.0;
  return obs;
}

}  // namespace dynq
