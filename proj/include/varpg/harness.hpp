#ifndef VARPG_HARNESS_HPP
#define VARPG_HARNESS_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "varpg/tabular_env.hpp"
#include "varpg/trainers.hpp"

namespace varpg {

// Everything a reproducible run needs: training setup, environment, seeds,
// and output location. Parsed from the sectioned key=value config format.
struct RunConfig {
  // [run]
  std::string name = "run";
  std::vector<std::uint64_t> seeds = {1};
  std::string out_dir;  // default runs/<name>; VARPG_OUT_ROOT prefixes relative paths
  int log_every = 1;

  // [env]
  std::string map_file;    // path to an ASCII map; empty = built-in 6x6 maze
  std::string map_inline;  // rows separated by '|', alternative to map_file
  NoiseKind noise = NoiseKind::Gaussian;
  double gamma = 0.999;
  int max_steps = 100;
  double step_reward = -1.0;

  // [train]
  std::string algo = "reinforce";  // reinforce | ppo
  TrainConfig train;

  void validate() const;  // throws invalid_input with field diagnostics
};

// Parses the config text; error messages carry line numbers and field names.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

// Canonical rendering; serialize(parse(text)) is idempotent.
std::string serialize_run_config(const RunConfig& config);

// FNV-1a over the canonical config text.
std::string config_hash(const std::string& canonical_text);

// Builds the maze for a config (default map or file/inline), applying gamma,
// max_steps and step_reward.
GridMaze maze_from_config(const RunConfig& config);

// Runs one training run per seed, writing seed_<k>.csv files and a
// manifest.jsonl into the output directory. Returns the process exit code:
// 0 ok, 1 when every seed failed, 2 on config errors.
int run_experiment(const std::string& config_path, const std::string& out_override,
                   std::ostream& log, std::ostream& err);

// Aggregates per-metric averages over the last `window` iterations of every
// CSV in the directory and writes the summary table to `out`. Returns 0, or
// 1 when the directory has no usable CSVs.
int emit_summary(const std::string& run_dir, std::ostream& out, std::ostream& err,
                 int window = 100);

}  // namespace varpg

#endif  // VARPG_HARNESS_HPP
