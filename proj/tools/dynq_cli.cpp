// Command-line frontend: train single runs, compare two configurations over
// several seeds, print exact optimal Q-tables, and evaluate checkpoints.
//
// Exit codes: 0 on success, 1 for configuration or usage errors, 2 for
// runtime failures (unwritable output, unreadable checkpoint, ...).

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "dynq/dynq.hpp"

namespace {

std::string fmt(double v) { return dynq::detail::format_value(v); }

int run_train(const std::string& config_path) {
  const dynq::ExperimentConfig cfg = dynq::parse_config_file(config_path);
  const dynq::RunMetrics metrics = dynq::run_experiment(cfg);
  std::cout << "wrote " << cfg.run.out_path << " (" << metrics.epochs.size()
            << " epochs)\n";
  if (!cfg.run.checkpoint_path.empty())
    std::cout << "wrote " << cfg.run.checkpoint_path << "\n";
  if (!metrics.epochs.empty() && metrics.epochs.back().eval_return_best)
    std::cout << "best eval return: "
              << fmt(*metrics.epochs.back().eval_return_best) << "\n";
  return 0;
}

int run_compare(const std::string& baseline_path,
                const std::string& treatment_path, int seeds,
                const std::string& out_path) {
  const dynq::ExperimentConfig baseline = dynq::parse_config_file(baseline_path);
  const dynq::ExperimentConfig treatment = dynq::parse_config_file(treatment_path);
  const dynq::ComparisonReport report =
      dynq::compare(baseline, treatment, seeds);
  dynq::detail::write_text_file(out_path, report.combined_csv);
  std::cout << "baseline:  median best " << fmt(report.baseline_median_best)
            << ", median steps to threshold "
            << fmt(report.baseline_median_steps) << "\n";
  std::cout << "treatment: median best " << fmt(report.treatment_median_best)
            << ", median steps to threshold "
            << fmt(report.treatment_median_steps) << "\n";
  if (report.median_best_improvement)
    std::cout << "relative improvement of median best: "
              << fmt(*report.median_best_improvement) << "\n";
  else
    std::cout << "relative improvement of median best: undefined "
                 "(baseline median is zero)\n";
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int run_oracle(const dynq::EnvConfig& env_cfg, double gamma, double tol) {
  const dynq::EnvironmentSpec spec = dynq::make_env(env_cfg);
  const dynq::QTable q = dynq::solve(spec, gamma, tol);
  std::cout << "state,action,q_value\n";
  for (int s = 0; s < q.n_states; ++s)
    for (int a = 0; a < q.n_actions; ++a)
      std::cout << s << ',' << a << ',' << fmt(q.at(s, a)) << "\n";
  return 0;
}

int run_eval(const std::string& checkpoint_path,
             const std::string& config_path) {
  const dynq::ExperimentConfig cfg = dynq::parse_config_file(config_path);
  const dynq::NetworkParams params = dynq::load_checkpoint(checkpoint_path);
  const dynq::EnvironmentSpec spec = dynq::make_env(cfg.env);
  if (params.input_dim() != spec.n_states ||
      params.output_dim() != spec.n_actions)
    throw dynq::ConfigError("checkpoint shape does not match environment: " +
                            checkpoint_path);
  const long horizon =
      cfg.env.horizon > 0 ? cfg.env.horizon : 10L * spec.n_states;
  dynq::Rng rng(dynq::mix_seed(cfg.run.seed, 3));
  const dynq::EvalResult result =
      dynq::evaluate_policy(params, spec, cfg.schedule.eps_test,
                            cfg.run.eval_steps, horizon, rng);
  const double gamma_eval =
      cfg.schedule.gamma_cap ? *cfg.schedule.gamma_cap : 0.99;
  std::cout << "eval_return_mean,avg_max_q,oracle_gap\n";
  std::cout << (result.return_mean ? fmt(*result.return_mean) : std::string())
            << ',' << fmt(result.avg_max_q) << ','
            << fmt(dynq::oracle_gap(params, spec, gamma_eval)) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep Q-learning on toy MDPs with dynamic hyperparameter "
               "schedules and an exact planning oracle"};
  app.require_subcommand(1);

  std::string config_path, treatment_path, checkpoint_path;
  std::string compare_out = "compare.csv";
  int seeds = 5;

  CLI::App* train =
      app.add_subcommand("train", "Run one experiment and write per-epoch metrics");
  train->add_option("config", config_path, "experiment config file")->required();

  CLI::App* cmp = app.add_subcommand(
      "compare", "Run two configurations over several seeds and compare medians");
  cmp->add_option("baseline", config_path, "baseline config file")->required();
  cmp->add_option("treatment", treatment_path, "treatment config file")->required();
  cmp->add_option("--seeds", seeds, "number of consecutive seeds")
      ->capture_default_str();
  cmp->add_option("--out", compare_out, "combined metrics CSV path")
      ->capture_default_str();

  dynq::EnvConfig env_cfg;
  double gamma = 0.99;
  double tol = 1e-10;
  CLI::App* oracle = app.add_subcommand(
      "oracle", "Print the exact optimal Q-table of an environment");
  oracle->add_option("--env", env_cfg.name,
                     "DelayedChain, TrapChain, or SlipperyGrid")->required();
  oracle->add_option("--gamma", gamma, "discount factor in [0, 1)")->required();
  oracle->add_option("--n", env_cfg.n, "chain length")->capture_default_str();
  oracle->add_option("--r-trap", env_cfg.r_trap, "trap exit reward")
      ->capture_default_str();
  oracle->add_option("--width", env_cfg.width, "grid width")->capture_default_str();
  oracle->add_option("--height", env_cfg.height, "grid height")
      ->capture_default_str();
  oracle->add_option("--p-slip", env_cfg.p_slip, "slip probability")
      ->capture_default_str();
  oracle->add_option("--tol", tol, "fixed-point residual tolerance")
      ->capture_default_str();

  CLI::App* eval = app.add_subcommand(
      "eval", "Evaluate a checkpointed network under a config");
  eval->add_option("checkpoint", checkpoint_path, "network checkpoint")->required();
  eval->add_option("config", config_path, "experiment config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train) return run_train(config_path);
    if (*cmp) return run_compare(config_path, treatment_path, seeds, compare_out);
    if (*oracle) return run_oracle(env_cfg, gamma, tol);
    if (*eval) return run_eval(checkpoint_path, config_path);
    return 1;
  } catch (const dynq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
