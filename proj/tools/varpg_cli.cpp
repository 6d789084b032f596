// varpg command-line entry point: train from a config, run the verification
// suites, or summarize a finished run directory.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "varpg/errors.hpp"
#include "varpg/harness.hpp"
#include "varpg/verification.hpp"
#include "varpg/version.hpp"

namespace {

int do_verify(const std::string& suite, std::uint64_t seed, const std::string& json_path) {
  std::vector<varpg::SuiteResult> results;
  try {
    results = varpg::run_verification(suite, seed);
  } catch (const varpg::invalid_input& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  bool all_pass = true;
  nlohmann::json doc = nlohmann::json::array();
  for (const varpg::SuiteResult& suite_result : results) {
    std::cout << "== " << suite_result.suite << " ==\n";
    for (const varpg::CheckResult& check : suite_result.checks) {
      std::cout << (check.pass ? "  [PASS] " : "  [FAIL] ") << check.name;
      if (!check.details.empty()) std::cout << "  (" << check.details << ")";
      if (!check.gating) std::cout << "  [informational]";
      std::cout << "\n";
      doc.push_back({{"suite", suite_result.suite},
                     {"check", check.name},
                     {"pass", check.pass},
                     {"gating", check.gating},
                     {"details", check.details}});
    }
    all_pass = all_pass && suite_result.all_pass();
  }
  if (!json_path.empty()) {
    std::ofstream out(json_path);
    out << doc.dump(2) << "\n";
  }
  std::cout << (all_pass ? "ALL PASS" : "FAILURES PRESENT") << "\n";
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"variability-penalized policy gradient toolkit"};
  app.set_version_flag("--version", varpg::kVersion);
  app.require_subcommand(1);

  std::string config_path, out_dir;
  CLI::App* run = app.add_subcommand("run", "train per the config file");
  run->add_option("config", config_path, "run config path")->required();
  run->add_option("--out", out_dir, "output directory override");

  std::string suite = "all", json_path;
  std::uint64_t seed = 20240001;
  CLI::App* verify = app.add_subcommand("verify", "run verification suites");
  verify->add_option("suite", suite, "estimators | coherence | oracle | all");
  verify->add_option("--seed", seed, "suite RNG seed");
  verify->add_option("--json", json_path, "write machine-readable results here");

  std::string run_dir;
  CLI::App* summarize = app.add_subcommand("summarize", "aggregate a run directory");
  summarize->add_option("dir", run_dir, "run output directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return varpg::run_experiment(config_path, out_dir, std::cout, std::cerr);
  if (verify->parsed()) return do_verify(suite, seed, json_path);
  if (summarize->parsed()) return varpg::emit_summary(run_dir, std::cout, std::cerr);
  return 2;
}
