#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "agent.hpp"
#include "config.hpp"
#include "exact_dp.hpp"
#include "mdp.hpp"
#include "schedule.hpp"

namespace dynq {

/// One row of the per-epoch metrics table. Hyperparameters are the values in
/// effect during the epoch; means are absent when no episode completed in
/// the corresponding phase.
struct EpochRecord {
  long epoch = 0;
  long steps = 0;
  double gamma = 0.0;
  double alpha = 0.0;
  double epsilon = 0.0;
  std::optional<double> train_return_mean;
  std::optional<double> eval_return_mean;
  /// Best evaluation mean seen up to and including this epoch.
  std::optional<double> eval_return_best;
  double avg_max_q = 0.0;
  /// Mean over non-terminal states of max_a Q(s, a) minus the exact optimal
  /// value at the evaluation discount; positive means overestimation.
  double oracle_gap = 0.0;
};

struct RunMetrics {
  std::vector<EpochRecord> epochs;
};

/// Result of an evaluation phase.
struct EvalResult {
  std::optional<double> return_mean;
  double avg_max_q = 0.0;
  long episodes_completed = 0;
};

/// Runs the greedy policy with a small exploration rate for a fixed number
/// of steps. Episodes end on terminal transitions or at the horizon; the
/// score is the mean undiscounted return over completed episodes (absent if
/// none completed, e.g. when steps is smaller than one episode). avg_max_q
/// averages max_a Q over every state acted from.
inline EvalResult evaluate_policy(const NetworkParams& params,
                                  const EnvironmentSpec& spec, double eps_test,
                                  long steps, long horizon, Rng& rng) {
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  EvalResult result;
  NetworkWorkspace ws;
  std::vector<double> obs(static_cast<std::size_t>(spec.n_states), 0.0);
  int state = spec.start_state;
  double episode_return = 0.0;
  long episode_steps = 0;
  double return_sum = 0.0;
  double max_q_sum = 0.0;
  long visits = 0;
  for (long t = 0; t < steps; ++t) {
    obs[static_cast<std::size_t>(state)] = 1.0;
    detail::forward_into(params, obs, ws);
    obs[static_cast<std::size_t>(state)] = 0.0;
    const std::vector<double>& q = ws.activations.back();
    max_q_sum += *std::max_element(q.begin(), q.end());
    visits += 1;
    const int action = select_action(q, eps_test, rng);
    const StepResult step = env_step(spec, state, action, rng);
    episode_return += step.reward;
    episode_steps += 1;
    if (step.terminal || episode_steps >= horizon) {
      return_sum += episode_return;
      result.episodes_completed += 1;
      state = spec.start_state;
      episode_return = 0.0;
      episode_steps = 0;
    } else {
      state = step.next_state;
    }
  }
  if (result.episodes_completed > 0)
    result.return_mean = return_sum / static_cast<double>(result.episodes_completed);
  if (visits > 0) result.avg_max_q = max_q_sum / static_cast<double>(visits);
  return result;
}

namespace detail {

inline double gap_against(const NetworkParams& params,
                          const EnvironmentSpec& spec,
                          const ValueTable& v_star) {
  const QTable q = q_table_of(params, spec);
  const ValueTable v = state_values(q);
  double sum = 0.0;
  long n = 0;
  for (int s = 0; s < spec.n_states; ++s) {
    if (spec.terminal_state[static_cast<std::size_t>(s)]) continue;
    sum += v.values[static_cast<std::size_t>(s)] -
           v_star.values[static_cast<std::size_t>(s)];
    n += 1;
  }
  return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

}  // namespace detail

/// Mean over non-terminal states of max_a Q(s, a) minus the exact optimal
/// value at discount gamma_eval. Positive values indicate overestimation.
inline double oracle_gap(const NetworkParams& params,
                         const EnvironmentSpec& spec, double gamma_eval) {
  const ValueTable v_star = state_values(solve(spec, gamma_eval, 1e-10));
  return detail::gap_against(params, spec, v_star);
}

inline double relative_improvement(double baseline, double treatment) {
  if (baseline == 0.0)
    throw std::invalid_argument("relative improvement undefined for zero baseline");
  return (treatment - baseline) / baseline;
}

namespace detail {

inline std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string format_value(const std::optional<double>& v) {
  return v ? format_value(*v) : std::string();
}

inline void append_record(std::string& out, const EpochRecord& r) {
  out += std::to_string(r.epoch);
  out += ',';
  out += std::to_string(r.steps);
  out += ',';
  out += format_value(r.gamma);
  out += ',';
  out += format_value(r.alpha);
  out += ',';
  out += format_value(r.epsilon);
  out += ',';
  out += format_value(r.train_return_mean);
  out += ',';
  out += format_value(r.eval_return_mean);
  out += ',';
  out += format_value(r.eval_return_best);
  out += ',';
  out += format_value(r.avg_max_q);
  out += ',';
  out += format_value(r.oracle_gap);
  out += '\n';
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  const std::size_t n = std::fwrite(text.data(), 1, text.size(), f);
  if (n != text.size() || std::fclose(f) != 0)
    throw std::runtime_error("failed to write: " + path);
}

}  // namespace detail

inline const char* kMetricsHeader =
    "epoch,steps,gamma,alpha,epsilon,train_return_mean,eval_return_mean,"
    "eval_return_best,avg_max_q,oracle_gap";

/// Renders metrics as CSV with a fixed header. Values are printed with ten
/// significant digits; absent values render as empty fields. Identical
/// metrics always produce byte-identical text.
inline std::string metrics_to_csv(const RunMetrics& metrics) {
  std::string out = kMetricsHeader;
  out += '\n';
  for (const EpochRecord& r : metrics.epochs) detail::append_record(out, r);
  return out;
}

/// Metrics plus the final online network of a finished run.
struct RunResult {
  RunMetrics metrics;
  NetworkParams final_params;
};

/// The full experiment loop, without touching the filesystem. Each epoch
/// trains for steps_per_epoch environment steps, evaluates for eval_steps,
/// records a metrics row, and then advances the hyperparameter schedule;
/// hyperparameters never change inside an epoch. An absent evaluation score
/// is fed to the schedule as 0. The oracle gap is measured against the
/// exact solution at the schedule's gamma cap (0.99 when uncapped).
inline RunResult run_experiment_core(const ExperimentConfig& cfg) {
  cfg.validate();
  const EnvironmentSpec spec = make_env(cfg.env);
  const long horizon =
      cfg.env.horizon > 0 ? cfg.env.horizon : 10L * spec.n_states;
  ScheduleState sched = ScheduleState::from_config(cfg.schedule);
  AgentState agent(spec, cfg.agent, horizon, mix_seed(cfg.run.seed, 1));
  Rng train_rng(mix_seed(cfg.run.seed, 2));
  Rng eval_rng(mix_seed(cfg.run.seed, 3));
  const double gamma_eval =
      cfg.schedule.gamma_cap ? *cfg.schedule.gamma_cap : 0.99;
  const ValueTable v_star = state_values(solve(spec, gamma_eval, 1e-10));

  RunResult result;
  std::optional<double> best;
  for (long epoch = 1; epoch <= cfg.run.epochs; ++epoch) {
    agent.hyper = {sched.gamma, sched.alpha, sched.epsilon};
    double return_sum = 0.0;
    long episodes = 0;
    for (long t = 0; t < cfg.run.steps_per_epoch; ++t) {
      const StepLog log = train_step(agent, train_rng);
      if (log.episode_ended) {
        return_sum += log.episode_return;
        episodes += 1;
      }
    }
    const EvalResult eval =
        evaluate_policy(agent.params, spec, cfg.schedule.eps_test,
                        cfg.run.eval_steps, horizon, eval_rng);
    if (eval.return_mean && (!best || *eval.return_mean > *best))
      best = eval.return_mean;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.steps = epoch * cfg.run.steps_per_epoch;
    rec.gamma = agent.hyper.gamma;
    rec.alpha = agent.hyper.alpha;
    rec.epsilon = agent.hyper.epsilon;
    if (episodes > 0)
      rec.train_return_mean = return_sum / static_cast<double>(episodes);
    rec.eval_return_mean = eval.return_mean;
    rec.eval_return_best = best;
    rec.avg_max_q = eval.avg_max_q;
    rec.oracle_gap = detail::gap_against(agent.params, spec, v_star);
    result.metrics.epochs.push_back(rec);

    sched = controller_epoch_update(sched, eval.return_mean.value_or(0.0));
  }
  result.final_params = agent.params;
  return result;
}

/// Runs the experiment and writes the metrics CSV to run.out_path, plus a
/// checkpoint of the final network when run.checkpoint_path is set.
inline RunMetrics run_experiment(const ExperimentConfig& cfg) {
  RunResult result = run_experiment_core(cfg);
  detail::write_text_file(cfg.run.out_path, metrics_to_csv(result.metrics));
  if (!cfg.run.checkpoint_path.empty())
    save_checkpoint(result.final_params, cfg.run.checkpoint_path);
  return std::move(result.metrics);
}

/// Per-seed summary of one run in a comparison.
struct SeedOutcome {
  std::uint64_t seed = 0;
  /// Best epoch evaluation mean of the run (0 when no episode ever completed).
  double best_eval = 0.0;
  /// Training steps consumed when the evaluation mean first reached the
  /// score threshold; absent if it never did.
  std::optional<long> steps_to_threshold;
};

struct ComparisonReport {
  std::vector<SeedOutcome> baseline;
  std::vector<SeedOutcome> treatment;
  std::vector<RunMetrics> baseline_runs;
  std::vector<RunMetrics> treatment_runs;
  double baseline_median_best = 0.0;
  double treatment_median_best = 0.0;
  /// Medians of steps-to-threshold, +infinity when the majority never reach it.
  double baseline_median_steps = 0.0;
  double treatment_median_steps = 0.0;
  /// (treatment - baseline) / baseline on median best scores; absent when the
  /// baseline median is zero.
  std::optional<double> median_best_improvement;
  std::string combined_csv;
};

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline SeedOutcome summarize_run(const RunMetrics& metrics, std::uint64_t seed,
                                 double threshold) {
  SeedOutcome out;
  out.seed = seed;
  for (const EpochRecord& r : metrics.epochs) {
    if (!r.eval_return_mean) continue;
    out.best_eval = std::max(out.best_eval, *r.eval_return_mean);
    if (!out.steps_to_threshold && *r.eval_return_mean >= threshold - 1e-12)
      out.steps_to_threshold = r.steps;
  }
  return out;
}

inline void require_comparable(const ExperimentConfig& a,
                               const ExperimentConfig& b) {
  const bool same_env = a.env.name == b.env.name && a.env.n == b.env.n &&
                        a.env.r_trap == b.env.r_trap &&
                        a.env.width == b.env.width &&
                        a.env.height == b.env.height &&
                        a.env.p_slip == b.env.p_slip &&
                        a.env.horizon == b.env.horizon;
  const bool same_run = a.run.epochs == b.run.epochs &&
                        a.run.steps_per_epoch == b.run.steps_per_epoch &&
                        a.run.eval_steps == b.run.eval_steps &&
                        a.run.seed == b.run.seed &&
                        a.run.score_threshold == b.run.score_threshold;
  if (!same_env || !same_run)
    throw ConfigError(
        "comparison arms must share environment and run settings and may "
        "differ only in agent and schedule fields");
}

}  // namespace detail

/// Runs both configurations across n_seeds consecutive seeds starting at the
/// shared run.seed and summarizes best scores and steps-to-threshold by their
/// medians. Nothing is written to disk; the combined per-epoch table is
/// returned as CSV labeled by arm and seed.
inline ComparisonReport compare(const ExperimentConfig& baseline,
                                const ExperimentConfig& treatment,
                                int n_seeds) {
  if (n_seeds < 1) throw std::invalid_argument("need at least one seed");
  baseline.validate();
  treatment.validate();
  detail::require_comparable(baseline, treatment);

  ComparisonReport report;
  report.combined_csv = "config,seed,";
  report.combined_csv += kMetricsHeader;
  report.combined_csv += '\n';

  const double threshold = baseline.run.score_threshold;
  std::vector<double> best[2], steps[2];
  const char* labels[2] = {"baseline", "treatment"};
  const ExperimentConfig* arms[2] = {&baseline, &treatment};
  for (int arm = 0; arm < 2; ++arm) {
    for (int i = 0; i < n_seeds; ++i) {
      ExperimentConfig cfg = *arms[arm];
      cfg.run.seed = cfg.run.seed + static_cast<std::uint64_t>(i);
      RunResult run = run_experiment_core(cfg);
      const SeedOutcome outcome =
          detail::summarize_run(run.metrics, cfg.run.seed, threshold);
      best[arm].push_back(outcome.best_eval);
      steps[arm].push_back(outcome.steps_to_threshold
                               ? static_cast<double>(*outcome.steps_to_threshold)
                               : std::numeric_limits<double>::infinity());
      for (const EpochRecord& r : run.metrics.epochs) {
        report.combined_csv += labels[arm];
        report.combined_csv += ',';
        report.combined_csv += std::to_string(cfg.run.seed);
        report.combined_csv += ',';
        detail::append_record(report.combined_csv, r);
      }
      auto& outcomes = arm == 0 ? report.baseline : report.treatment;
      auto& runs = arm == 0 ? report.baseline_runs : report.treatment_runs;
      outcomes.push_back(outcome);
      runs.push_back(std::move(run.metrics));
    }
  }
  report.baseline_median_best = detail::median(best[0]);
  report.treatment_median_best = detail::median(best[1]);
  report.baseline_median_steps = detail::median(steps[0]);
  report.treatment_median_steps = detail::median(steps[1]);
  if (report.baseline_median_best != 0.0)
    report.median_best_improvement = relative_improvement(
        report.baseline_median_best, report.treatment_median_best);
  return report;
}

}  // namespace dynq
