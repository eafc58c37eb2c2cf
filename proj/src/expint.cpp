#include "convrough/expint.hpp"

#include <algorithm>
#include <cmath>

#include "convrough/errors.hpp"

namespace convrough {

double exp_int(double lambda, double mu, double delta) {
  if (lambda < 0.0 || mu < 0.0 || delta < 0.0) throw InvalidInput("exp_int needs nonnegative arguments");
  double d = (lambda - mu) * delta;
  double base = std::exp(-mu * delta);
  if (std::abs(d) < kExpIntThreshold) return base * delta * (1.0 - d / 2.0 + d * d / 6.0 - d * d * d / 24.0);
  return base * (-std::expm1(-d)) / (lambda - mu);
}

Eigen::MatrixXd iterated_exp_int_matrix(const std::vector<double>& z, double delta) {
  if (z.empty()) throw InvalidInput("iterated_exp_int needs at least one exponent");
  if (delta < 0.0) throw InvalidInput("iterated_exp_int needs delta >= 0");
  for (double v : z)
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput("iterated_exp_int needs finite nonnegative exponents");
  const Eigen::Index n = static_cast<Eigen::Index>(z.size());
  double zmax = *std::max_element(z.begin(), z.end());
  int squarings = 0;
  double h = delta;
  while (zmax * h > 0.5 || h > 1.0) {
    h *= 0.5;
    ++squarings;
  }
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, i) = -z[static_cast<std::size_t>(i)] * h;
    if (i + 1 < n) a(i, i + 1) = h;
  }
  Eigen::MatrixXd e = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  for (int m = 1; m < 80; ++m) {
    term = (term * a) / static_cast<double>(m);
    e += term;
    bool done = m >= n;
    for (Eigen::Index i = 0; i < n && done; ++i)
      for (Eigen::Index j = i; j < n; ++j)
        if (std::abs(term(i, j)) > 1e-18 * std::abs(e(i, j))) {
          done = false;
          break;
        }
    if (done) break;
  }
  for (int q = 0; q < squarings; ++q) e = (e * e).eval();
  return e.triangularView<Eigen::Upper>();
}

double iterated_exp_int(const std::vector<double>& z, double delta) {
  if (z.size() == 2) return exp_int(z[0], z[1], delta);
  if (z.size() == 1) return std::exp(-z[0] * delta);
  return iterated_exp_int_matrix(z, delta)(0, static_cast<Eigen::Index>(z.size()) - 1);
}

}  // namespace convrough
