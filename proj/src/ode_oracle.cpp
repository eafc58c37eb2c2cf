#include "convrough/ode_oracle.hpp"

#include <cmath>

#include "convrough/errors.hpp"

namespace convrough {

Eigen::MatrixXd rk4_volterra(const KernelMeasure& measure, const SigmaField& sigma, const SmoothFunction& driver,
                             const Eigen::RowVectorXd& a, const std::vector<double>& times, double max_step) {
  if (times.empty() || times.front() != 0.0) throw InvalidInput("oracle times must start at 0");
  if (!(max_step > 0.0)) throw InvalidInput("oracle step must be positive");
  const std::size_t K = measure.size();
  const Eigen::Index d = a.size();
  // state row k is y~_k
  Eigen::MatrixXd state = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K), d);
  auto project = [&](const Eigen::MatrixXd& s) {
    Eigen::RowVectorXd y = a;
    for (std::size_t k = 0; k < K; ++k) y += measure.weight(k) * s.row(static_cast<Eigen::Index>(k));
    return y;
  };
  auto rhs = [&](double t, const Eigen::MatrixXd& s) {
    Eigen::RowVectorXd drive = driver.derivative(t) * sigma(project(s));
    Eigen::MatrixXd out(s.rows(), s.cols());
    for (std::size_t k = 0; k < K; ++k) {
      auto r = static_cast<Eigen::Index>(k);
      out.row(r) = -measure.xi(k) * s.row(r) + drive;
    }
    return out;
  };
  Eigen::MatrixXd out(static_cast<Eigen::Index>(times.size()), d);
  out.row(0) = project(state);
  for (std::size_t i = 1; i < times.size(); ++i) {
    double span = times[i] - times[i - 1];
    if (!(span > 0.0)) throw InvalidInput("oracle times must increase");
    auto steps = static_cast<long>(std::ceil(span / max_step));
    double h = span / static_cast<double>(steps);
    for (long j = 0; j < steps; ++j) {
      double t = times[i - 1] + static_cast<double>(j) * h;
      Eigen::MatrixXd k1 = rhs(t, state);
      Eigen::MatrixXd k2 = rhs(t + 0.5 * h, state + 0.5 * h * k1);
      Eigen::MatrixXd k3 = rhs(t + 0.5 * h, state + 0.5 * h * k2);
      Eigen::MatrixXd k4 = rhs(t + h, state + h * k3);
      state += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    out.row(static_cast<Eigen::Index>(i)) = project(state);
  }
  return out;
}

}  // namespace convrough
