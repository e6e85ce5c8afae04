#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace lcsim::cli {

struct GlobalOptions {
  std::optional<uint64_t> seed;
  int threads = 1;
  std::string out_dir = "out";
};

struct SimulateOptions {
  std::string config_path;
  std::optional<double> alpha1;
  std::optional<int> runs;
  int save_runs = 1;
};

int cmd_simulate(const SimulateOptions& options, const GlobalOptions& global);

// The built-in experiment: alpha_1 in {0.125, 0.25, 0.375, 0.5}, two arms
// (no noise / noise on features 2..51 from iteration 50, beta 0), 200 runs
// each on shared batch streams. runs_override shrinks it for smoke tests.
int cmd_reproduce_appendix_e(const GlobalOptions& global,
                             std::optional<int> runs_override);

int cmd_check(const std::string& what, const std::string& config_path,
              const GlobalOptions& global);

}  // namespace lcsim::cli
