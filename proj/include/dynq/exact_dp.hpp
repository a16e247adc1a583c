#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mdp.hpp"

namespace dynq {

/// Dense action-value table, row-major over (state, action).
struct QTable {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> values;

  static QTable zeros(int n_states, int n_actions) {
    QTable q;
    q.n_states = n_states;
    q.n_actions = n_actions;
    q.values.assign(static_cast<std::size_t>(n_states) *
                        static_cast<std::size_t>(n_actions),
                    0.0);
    return q;
  }

  double& at(int s, int a) {
    return values[static_cast<std::size_t>(s) *
                      static_cast<std::size_t>(n_actions) +
                  static_cast<std::size_t>(a)];
  }
  double at(int s, int a) const {
    return values[static_cast<std::size_t>(s) *
                      static_cast<std::size_t>(n_actions) +
                  static_cast<std::size_t>(a)];
  }
};

/// Dense state-value table.
struct ValueTable {
  std::vector<double> values;
};

/// Largest absolute entry-wise difference between two tables of equal shape.
inline double sup_norm_diff(const QTable& a, const QTable& b) {
  if (a.n_states != b.n_states || a.n_actions != b.n_actions)
    throw std::invalid_argument("table shapes differ");
  double d = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    d = std::max(d, std::abs(a.values[i] - b.values[i]));
  return d;
}

/// One synchronous Bellman optimality backup:
///   (HQ)(s,a) = sum_o p_o * (r_o + gamma * max_a' Q(s'_o, a'))
/// with the bootstrap term dropped on terminal outcomes. Rows of terminal
/// states stay identically zero. All state-action pairs are backed up from
/// the same input table (Jacobi sweep), which is what makes H a
/// gamma-contraction in the sup norm.
inline QTable bellman_backup(const QTable& q, const EnvironmentSpec& spec,
                             double gamma) {
  if (q.n_states != spec.n_states || q.n_actions != spec.n_actions)
    throw std::invalid_argument("table shape does not match environment");
  QTable out = QTable::zeros(spec.n_states, spec.n_actions);
  for (int s = 0; s < spec.n_states; ++s) {
    if (spec.terminal_state[static_cast<std::size_t>(s)]) continue;
    for (int a = 0; a < spec.n_actions; ++a) {
      double v = 0.0;
      for (const Outcome& o : spec.outcomes_for(s, a)) {
        double target = o.reward;
        if (!o.terminal) {
          double best = q.at(o.next_state, 0);
          for (int b = 1; b < q.n_actions; ++b)
            best = std::max(best, q.at(o.next_state, b));
          target += gamma * best;
        }
        v += o.probability * target;
      }
      out.at(s, a) = v;
    }
  }
  return out;
}

/// Value iteration from the zero table until the fixed-point residual
/// ||HQ - Q||_inf drops to tol. Returns the table whose residual was
/// measured, so re-applying the backup moves the result by at most tol.
inline QTable solve(const EnvironmentSpec& spec, double gamma, double tol) {
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("discount factor must lie in [0, 1)");
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  // Contraction gives residual_k <= 2 R_max gamma^k / (1 - gamma); cap the
  // iteration count a little above the k that bound needs, as insurance
  // against a residual that stalls at rounding level.
  long max_iters = 64;
  const double r_max = spec.max_abs_reward();
  if (gamma > 0.0 && r_max > 0.0) {
    const double k = std::log(tol * (1.0 - gamma) / (2.0 * r_max)) / std::log(gamma);
    max_iters += static_cast<long>(std::ceil(std::max(k, 0.0)));
  }
  QTable q = QTable::zeros(spec.n_states, spec.n_actions);
  for (long i = 0; i < max_iters; ++i) {
    QTable next = bellman_backup(q, spec, gamma);
    if (sup_norm_diff(next, q) <= tol) return q;
    q = std::move(next);
  }
  throw std::runtime_error("value iteration failed to reach tolerance");
}

/// Greedy action per state; ties resolve to the lowest action index.
inline std::vector<int> greedy_policy(const QTable& q) {
  std::vector<int> policy(static_cast<std::size_t>(q.n_states), 0);
  for (int s = 0; s < q.n_states; ++s) {
    int best = 0;
    for (int a = 1; a < q.n_actions; ++a)
      if (q.at(s, a) > q.at(s, best)) best = a;
    policy[static_cast<std::size_t>(s)] = best;
  }
  return policy;
}

/// State values V(s) = max_a Q(s, a).
inline ValueTable state_values(const QTable& q) {
  ValueTable v;
  v.values.assign(static_cast<std::size_t>(q.n_states), 0.0);
  for (int s = 0; s < q.n_states; ++s) {
    double best = q.at(s, 0);
    for (int a = 1; a < q.n_actions; ++a) best = std::max(best, q.at(s, a));
    v.values[static_cast<std::size_t>(s)] = best;
  }
  return v;
}

}  // namespace dynq
