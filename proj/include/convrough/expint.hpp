#pragma once

#include <vector>

#include <Eigen/Dense>

namespace convrough {

inline constexpr double kExpIntThreshold = 1e-6;

// int_0^D e^{-lambda (D - r)} e^{-mu r} dr
double exp_int(double lambda, double mu, double delta);

// I(z_0, ..., z_k; D) = int_{0 < r_k < ... < r_1 < D} e^{-z_0 (D - r_1)} ... e^{-z_k r_k} dr,
// the (0, k) entry of exp(D A) with A bidiagonal (diagonal -z, superdiagonal 1).
double iterated_exp_int(const std::vector<double>& z, double delta);

// Full upper-triangular exp(D A); entry (i, j) is I(z_i, ..., z_j; D).
Eigen::MatrixXd iterated_exp_int_matrix(const std::vector<double>& z, double delta);

}  // namespace convrough
