#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "convrough/driver.hpp"
#include "convrough/laplace.hpp"
#include "convrough/sigma.hpp"
#include "convrough/solver.hpp"

namespace convrough {

inline constexpr const char* kLibraryVersion = "0.1.0";
inline constexpr const char* kOutputEnv = "CONVROUGH_OUT";

enum ExitCode : int { exit_ok = 0, exit_check_failed = 1, exit_invalid = 2, exit_solver_failed = 3 };

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct RunOptions {
  std::string out_dir;  // empty: CONVROUGH_OUT, then the config "output", then "out"
  unsigned jobs = 1;
  std::vector<std::string> checks;  // empty runs every check; otherwise names or name prefixes
};

struct RunResult {
  int exit_code = exit_ok;
  std::string message;
  std::string out_dir;
  std::vector<CheckResult> checks;
  std::vector<std::string> artifacts;
};

// "42" -> {42}; "1..4" -> {1, 2, 3}; comma-separated lists of either form.
std::vector<std::uint64_t> seed_expand(const std::string& spec);

MeasurePtr measure_from_json(const nlohmann::json& spec, QuadratureReport* report = nullptr);
SigmaField sigma_from_json(const nlohmann::json& spec, Eigen::Index n, Eigen::Index d);
SolverConfig solver_from_json(const nlohmann::json& spec, bool young);
// Driver for one seed; smooth drivers ignore the seed.
DriverPath driver_from_json(const nlohmann::json& spec, std::uint64_t seed);
SmoothFunction smooth_from_json(const nlohmann::json& spec);

std::string resolve_output_dir(const std::string& cli_out, const nlohmann::json& config);

RunResult run_experiment(const nlohmann::json& config, const RunOptions& options, const std::string& config_text = "");
RunResult run_config_file(const std::string& path, const RunOptions& options);

// Runs fn(i) for i in [0, count) on up to `jobs` threads; exceptions are rethrown on the caller.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn);

}  // namespace convrough
