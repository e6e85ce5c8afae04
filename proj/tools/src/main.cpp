#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "lcsim/trainer.hpp"

#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"linear contrastive feature learning: simulator and checks"};
  app.require_subcommand(1);

  lcsim::cli::GlobalOptions global;
  app.add_option("--seed", global.seed, "override the experiment seed");
  app.add_option("--threads", global.threads, "worker threads")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", global.out_dir, "output directory (default: out)");

  lcsim::cli::SimulateOptions sim;
  CLI::App* simulate =
      app.add_subcommand("simulate", "run a training experiment from a JSON config");
  simulate->add_option("config", sim.config_path, "experiment config file")
      ->required();
  simulate->add_option("--alpha1", sim.alpha1,
                       "override the first feature's view correlation");
  simulate->add_option("--runs", sim.runs, "override the run count");
  simulate->add_option("--save-runs", sim.save_runs,
                       "number of per-run trajectory CSVs to keep (default 1)");

  std::optional<int> appendix_runs;
  CLI::App* reproduce = app.add_subcommand(
      "reproduce-appendix-e",
      "rerun the noisy-views experiment grid and render its figures");
  reproduce->add_option("--runs", appendix_runs,
                        "runs per arm (default 200)");

  std::string what;
  std::string check_config;
  CLI::App* check =
      app.add_subcommand("check", "run one of the verification suites");
  check->add_option("what", what, "grad | downstream | theorem | limit | weiner")
      ->required();
  check->add_option("--config", check_config, "suite parameter overrides (JSON)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (simulate->parsed()) return lcsim::cli::cmd_simulate(sim, global);
    if (reproduce->parsed()) {
      return lcsim::cli::cmd_reproduce_appendix_e(global, appendix_runs);
    }
    if (check->parsed()) return lcsim::cli::cmd_check(what, check_config, global);
  } catch (const lcsim::NumericalAbort& e) {
    std::string where = "iteration " + std::to_string(e.iteration);
    if (e.run >= 0) where += ", run " + std::to_string(e.run);
    fprintf(stderr, "numerical abort: %s (%s)\n", e.what(), where.c_str());
    return 2;
  } catch (const std::exception& e) {
    fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
