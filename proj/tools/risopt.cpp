#include <iostream>

#include "CLI11.hpp"
#include "risopt/risopt.hpp"

namespace {

int run(const std::string& config, const std::string& out, const std::string& algos,
        const CLI::Option* seed_opt, std::uint64_t seed, const CLI::Option* trials_opt, int trials,
        const CLI::Option* workers_opt, int workers) {
  risopt::ExperimentSpec spec;
  try {
    spec = risopt::load_config(config);
    if (!out.empty()) spec.output_path = out;
    if (!algos.empty()) spec.algorithms = risopt::detail::split_list(algos);
    if (*seed_opt) spec.master_seed = seed;
    if (*trials_opt) spec.trials = trials;
    if (*workers_opt) spec.workers = workers;
    risopt::validate_spec(spec);
  } catch (const risopt::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  }
  try {
    const auto rows = risopt::run_experiment(spec);
    risopt::emit_csv(rows, spec.output_path);
    if (!spec.plot_path.empty()) risopt::emit_plot_script(rows, spec.plot_path);
    std::size_t errors = 0;
    for (const auto& r : rows) errors += r.error.empty() ? 0 : 1;
    std::cout << "wrote " << rows.size() << " rows to " << spec.output_path;
    if (errors) std::cout << " (" << errors << " failed trials)";
    std::cout << '\n';
  } catch (const risopt::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete RIS phase optimisation experiments"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "Run an experiment grid and write CSV results");
  std::string config, out, algos;
  std::uint64_t seed = 0;
  int trials = 1, workers = 1;
  run_cmd->add_option("--config", config, "Experiment configuration file")->required();
  run_cmd->add_option("--out", out, "Output CSV path");
  auto* seed_opt = run_cmd->add_option("--seed", seed, "Master seed");
  run_cmd->add_option("--algos", algos, "Comma-separated subset of es,idbp,tmh,ao1,ao2");
  auto* trials_opt = run_cmd->add_option("--trials", trials, "Trials per grid point")->check(CLI::PositiveNumber);
  auto* workers_opt = run_cmd->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);

  auto* verify_cmd = app.add_subcommand("verify", "Run the acceptance suite");
  int sweep_trials = 20;
  verify_cmd->add_option("--sweep-trials", sweep_trials, "Trials per SNR point in the ordering sweep")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*run_cmd) return run(config, out, algos, seed_opt, seed, trials_opt, trials, workers_opt, workers);
  const auto results = risopt::acceptance::run_all(std::cout, sweep_trials);
  for (const auto& r : results)
    if (!r.passed) return 2;
  return 0;
}
