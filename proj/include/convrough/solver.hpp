#pragma once

#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "convrough/controlled.hpp"
#include "convrough/lift.hpp"
#include "convrough/sigma.hpp"

namespace convrough {

struct SolverConfig {
  double gamma = 0.45;
  double kappa = 0.4;
  int sub_level = 4;  // each driver cell is split into 2^sub_level steps
  double tolerance = 1e-10;
  int max_iterations = 60;
  std::size_t n_start = 2;
  std::size_t n_cap = 4096;
  bool young = false;
  double beta = 1.0;
  double alpha1 = std::numeric_limits<double>::quiet_NaN();
  double alpha2 = std::numeric_limits<double>::quiet_NaN();
  bool diagnostics = true;
};

// Optional restart: solve on driver indices [start, end] from a given y~ state at start.
struct SolveRange {
  std::size_t start = 0;
  std::size_t end = TimeGrid::npos;
  std::vector<Eigen::RowVectorXd> ytilde;  // per atom, empty means zero
};

struct IntervalDiagnostics {
  std::size_t start = 0;  // driver grid indices
  std::size_t end = 0;
  double t0 = 0.0;
  double t1 = 0.0;
  std::size_t n_param = 0;  // N at the time the interval was accepted
  std::size_t index = 0;    // n in eps_n = 1 / (N + n)
  int iterations = 0;
  double contraction = 0.0;
  double last_difference = 0.0;
  int reruns = 0;
  // Discrete Q~ norm pieces over driver grid pairs of the interval.
  double sup_ytilde = 0.0;
  double holder_ytilde = 0.0;
  double sup_zeta = 0.0;
  double holder_zeta = 0.0;
  double holder_remainder = 0.0;
  double q_norm = 0.0;
  double start_l1 = 0.0;
  bool ball_ok = true;   // q_norm <= (N + n)^alpha2
  bool start_ok = true;  // start_l1 <= (N + n)^alpha1
};

struct Solution {
  std::string mode;
  GridPtr grid;
  MeasurePtr measure;
  Eigen::RowVectorXd a;
  std::size_t first = 0;
  std::size_t last = 0;
  // Driver grid values; rows outside [first, last] are zero.
  std::shared_ptr<LaplaceControlledPath> path;
  Eigen::MatrixXd y;
  // Fine mesh values.
  int sub_level = 0;
  std::vector<double> mesh;
  std::vector<Eigen::MatrixXd> mesh_ytilde;  // per atom, mesh points x d
  Eigen::MatrixXd mesh_y;
  std::vector<Eigen::MatrixXd> mesh_zeta;
  std::vector<IntervalDiagnostics> intervals;
  std::size_t final_n = 0;
  int total_iterations = 0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  bool window_ok = true;  // 0 < alpha2 < (gamma - kappa) / 2 and alpha2 - gamma < alpha1 - 1 < alpha2 - kappa

  std::vector<Eigen::RowVectorXd> ytilde_at(std::size_t i) const;
};

Solution solve_young(const RoughLift& lift, const SigmaField& sigma, const Eigen::RowVectorXd& a,
                     const SolverConfig& config, const SolveRange& range = {});
Solution solve_rough(const RoughLift& lift, const SigmaField& sigma, const Eigen::RowVectorXd& a,
                     const SolverConfig& config, const SolveRange& range = {});
// dy = dx sigma(y) solved directly with increments dx and (dx (x) dx) / 2 of the driver.
Solution solve_rough_ode(const DriverPath& driver, const SigmaField& sigma, const Eigen::RowVectorXd& a,
                         const SolverConfig& config, const SolveRange& range = {});

// max over consecutive mesh steps and atoms of |y~_{j+1} - e^{-xi h} y~_j - germ_j(sigma(y_j))|.
double picard_residual(const Solution& solution, const RoughLift& lift, const SigmaField& sigma, bool young);

}  // namespace convrough
