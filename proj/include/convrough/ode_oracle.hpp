#pragma once

#include <vector>

#include <Eigen/Dense>

#include "convrough/driver.hpp"
#include "convrough/laplace.hpp"
#include "convrough/sigma.hpp"

namespace convrough {

// Classical RK4 on y~_k' = -xi_k y~_k + x'(t) sigma(y), y = a + sum_k w_k y~_k, y~(0) = 0.
// Returns y at `times` (first time 0), one row each; every output interval uses equal steps <= max_step.
Eigen::MatrixXd rk4_volterra(const KernelMeasure& measure, const SigmaField& sigma, const SmoothFunction& driver,
                             const Eigen::RowVectorXd& a, const std::vector<double>& times, double max_step);

}  // namespace convrough
