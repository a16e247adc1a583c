#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace dynq {

/// Hyperparameter schedule settings. Defaults reproduce the dynamic protocol
/// studied by the training harness: discount factor walked toward 1 by a
/// constant factor on its complement, learning rate decayed geometrically,
/// and an optional feedback rule that raises exploration when evaluation
/// scores stagnate.
struct ScheduleConfig {
  double gamma0 = 0.95;
  /// Per-epoch factor on (1 - gamma); 1 keeps gamma fixed.
  double gamma_factor = 0.98;
  /// Upper bound for gamma, disabled when absent.
  std::optional<double> gamma_cap = 0.99;

  double alpha0 = 0.005;
  /// Per-epoch factor on alpha; 1 keeps alpha fixed.
  double alpha_factor = 0.98;

  /// Exploration rate at the start of training.
  double eps_train0 = 0.1;
  /// Exploration rate used during evaluation phases.
  double eps_test = 0.05;

  /// Feedback rule: multiply epsilon by boost when scores stagnate, divide
  /// when they improve, clamped to [eps_min, eps_max]. Off by default.
  bool adaptive_eps = false;
  /// Number of most recent epoch scores compared against the earlier ones.
  int stagnation_window = 10;
  /// Minimum improvement of the recent maximum over the earlier maximum for
  /// progress to count.
  double stagnation_delta = 0.01;
  double eps_boost = 1.5;
  double eps_min = 0.05;
  double eps_max = 0.5;

  void validate() const {
    if (!(gamma0 >= 0.0 && gamma0 < 1.0))
      throw std::invalid_argument("gamma0 must lie in [0, 1)");
    if (!(gamma_factor > 0.0 && gamma_factor <= 1.0))
      throw std::invalid_argument("gamma_factor must lie in (0, 1]");
    if (gamma_cap && !(*gamma_cap >= 0.0 && *gamma_cap < 1.0))
      throw std::invalid_argument("gamma_cap must lie in [0, 1)");
    if (!(alpha0 > 0.0)) throw std::invalid_argument("alpha0 must be positive");
    if (!(alpha_factor > 0.0 && alpha_factor <= 1.0))
      throw std::invalid_argument("alpha_factor must lie in (0, 1]");
    if (!(eps_train0 >= 0.0 && eps_train0 <= 1.0))
      throw std::invalid_argument("eps_train0 must lie in [0, 1]");
    if (!(eps_test >= 0.0 && eps_test <= 1.0))
      throw std::invalid_argument("eps_test must lie in [0, 1]");
    if (stagnation_window < 1)
      throw std::invalid_argument("stagnation_window must be at least 1");
    if (!(stagnation_delta >= 0.0))
      throw std::invalid_argument("stagnation_delta must be non-negative");
    if (!(eps_boost > 1.0))
      throw std::invalid_argument("eps_boost must exceed 1");
    if (!(eps_min >= 0.0 && eps_min <= eps_max && eps_max <= 1.0))
      throw std::invalid_argument("need 0 <= eps_min <= eps_max <= 1");
  }
};

/// Live hyperparameter values plus the evaluation history the adaptive
/// exploration rule feeds on. Advanced once per epoch boundary.
struct ScheduleState {
  double gamma = 0.95;
  double alpha = 0.005;
  double epsilon = 0.1;
  long epoch = 0;
  std::vector<double> eval_history;
  ScheduleConfig config;

  static ScheduleState from_config(const ScheduleConfig& cfg) {
    cfg.validate();
    ScheduleState s;
    s.config = cfg;
    s.gamma = cfg.gamma_cap ? std::min(cfg.gamma0, *cfg.gamma_cap) : cfg.gamma0;
    s.alpha = cfg.alpha0;
    s.epsilon = cfg.eps_train0;
    return s;
  }
};

/// Moves gamma toward 1 by shrinking its distance to 1:
///   gamma' = 1 - factor * (1 - gamma), clamped to cap when present.
inline double next_gamma(double gamma, double factor,
                         std::optional<double> cap) {
  double g = 1.0 - factor * (1.0 - gamma);
  if (cap) g = std::min(g, *cap);
  return g;
}

/// Closed form of k applications of the uncapped gamma rule.
inline double gamma_at_epoch(double gamma0, double factor, long k) {
  return 1.0 - std::pow(factor, static_cast<double>(k)) * (1.0 - gamma0);
}

inline double next_alpha(double alpha, double factor) { return alpha * factor; }

/// Adaptive exploration rule. With the full history of epoch evaluation
/// scores (latest already appended), training is stagnating when the best
/// recent score fails to beat the best earlier score by stagnation_delta.
/// Stagnation multiplies epsilon by eps_boost, progress divides it; the
/// result is clamped to [eps_min, eps_max]. Until the history extends beyond
/// the window there is no earlier score to beat, so the rule anneals.
inline double next_epsilon(const ScheduleState& state) {
  const ScheduleConfig& cfg = state.config;
  if (!cfg.adaptive_eps) return state.epsilon;
  const std::size_t n = state.eval_history.size();
  const std::size_t w = static_cast<std::size_t>(cfg.stagnation_window);
  bool stagnating = false;
  if (n > w) {
    const auto recent_begin = state.eval_history.end() - static_cast<long>(w);
    const double recent_max = *std::max_element(recent_begin, state.eval_history.end());
    const double earlier_max =
        *std::max_element(state.eval_history.begin(), recent_begin);
    stagnating = recent_max < earlier_max + cfg.stagnation_delta;
  }
  const double eps = stagnating ? state.epsilon * cfg.eps_boost
                                : state.epsilon / cfg.eps_boost;
  return std::clamp(eps, cfg.eps_min, cfg.eps_max);
}

/// Epoch-boundary update: records the epoch's evaluation score, then advances
/// gamma, alpha, and epsilon together and bumps the epoch counter. Hyper-
/// parameters change only here, never inside an epoch.
inline ScheduleState controller_epoch_update(ScheduleState state,
                                             double epoch_eval_score) {
  state.eval_history.push_back(epoch_eval_score);
  state.gamma = next_gamma(state.gamma, state.config.gamma_factor,
                           state.config.gamma_cap);
  state.alpha = next_alpha(state.alpha, state.config.alpha_factor);
  state.epsilon = next_epsilon(state);
  state.epoch += 1;
  return state;
}

}  // namespace dynq
