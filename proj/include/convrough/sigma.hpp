#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace convrough {

// sigma: R^{1,d} -> R^{n,d} with derivatives up to order three.
// jacobian[m] = d sigma / d y_m; hessian[m * d + p]; third[(m * d + p) * d + q].
class SigmaField {
 public:
  using Eval = std::function<void(const Eigen::RowVectorXd& y, Eigen::MatrixXd& out)>;
  using Derivs = std::function<void(const Eigen::RowVectorXd& y, std::vector<Eigen::MatrixXd>& out)>;

  SigmaField(Eigen::Index n, Eigen::Index d, Eval value, Derivs d1, Derivs d2, Derivs d3,
             std::array<double, 4> bounds = {0.0, 0.0, 0.0, 0.0}, std::string name = "custom");

  Eigen::Index n() const noexcept { return n_; }
  Eigen::Index d() const noexcept { return d_; }
  const std::string& name() const noexcept { return name_; }
  const std::array<double, 4>& bounds() const noexcept { return bounds_; }

  Eigen::MatrixXd operator()(const Eigen::RowVectorXd& y) const;
  void value(const Eigen::RowVectorXd& y, Eigen::MatrixXd& out) const { value_(y, out); }
  std::vector<Eigen::MatrixXd> jacobian(const Eigen::RowVectorXd& y) const;
  void jacobian(const Eigen::RowVectorXd& y, std::vector<Eigen::MatrixXd>& out) const { d1_(y, out); }
  std::vector<Eigen::MatrixXd> hessian(const Eigen::RowVectorXd& y) const;
  std::vector<Eigen::MatrixXd> third(const Eigen::RowVectorXd& y) const;

 private:
  Eigen::Index n_, d_;
  Eval value_;
  Derivs d1_, d2_, d3_;
  std::array<double, 4> bounds_;
  std::string name_;
};

// Catalog: sigma(y)_{il} = offset_{il} + sum_m coupling_{(i d + l), m} g(y_m), with g one of
// "zero" (sigma = 0), "constant" (sigma = offset), "linear" (g = id), "sin", "tanh".
// Without a coupling matrix, coupling_{(i d + l), m} = scale_{il} [m == l].
SigmaField make_sigma(const std::string& name, const Eigen::MatrixXd& offset, const Eigen::MatrixXd& scale,
                      const Eigen::MatrixXd& coupling = Eigen::MatrixXd());

}  // namespace convrough
