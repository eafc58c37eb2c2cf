#include <CLI11.hpp>

#include <iostream>

#include "convrough/experiment.hpp"
#include "convrough/kernels.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Volterra equations driven by convolutional rough paths"};
  app.set_version_flag("--version", std::string(convrough::kLibraryVersion));
  app.require_subcommand(1);

  std::string config;
  convrough::RunOptions options;
  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", config, "Experiment config (JSON)")->required();
  run->add_option("--out", options.out_dir, "Output directory (overrides CONVROUGH_OUT and the config)");
  run->add_option("--jobs", options.jobs, "Worker threads for ensembles")->check(CLI::PositiveNumber);
  run->add_option("--check", options.checks, "Run only checks with this name or prefix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : convrough::exit_invalid;
  }

  convrough::RunResult result = convrough::run_config_file(config, options);
  for (const auto& c : result.checks)
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " measured=" << c.measured << " threshold=" << c.threshold
              << (c.detail.empty() ? "" : " (" + c.detail + ")") << "\n";
  if (!result.message.empty()) std::cerr << "convrough: " << result.message << "\n";
  if (!result.out_dir.empty()) std::cout << "output: " << result.out_dir << "\n";
  return result.exit_code;
}
