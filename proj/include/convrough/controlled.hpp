#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "convrough/lift.hpp"
#include "convrough/sewing.hpp"
#include "convrough/sigma.hpp"

namespace convrough {

// A p x q path z with Gubinelli derivative given per column: derivative(t)[l] is n x p and
// (delta z)_ts column l = (x1_ts derivative(s)[l])^T + r_ts column l.
class ControlledPath {
 public:
  using ValueFn = std::function<Value(double)>;
  using DerivativeFn = std::function<std::vector<Value>(double)>;

  ControlledPath(GridPtr grid, ValueFn value, DerivativeFn derivative, double kappa);
  // Path known on grid points only; off-grid evaluation throws.
  static ControlledPath sampled(GridPtr grid, std::vector<Value> values, std::vector<std::vector<Value>> derivatives,
                                double kappa);
  // Row path y (1 x d) with zeta in R^{n x d}.
  static ControlledPath from_row(GridPtr grid, ValueFn y, std::function<Value(double)> zeta, double kappa);

  const TimeGrid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  double kappa() const noexcept { return kappa_; }
  Value value(double t) const { return value_(t); }
  std::vector<Value> derivative(double t) const { return derivative_(t); }
  const ValueFn& value_fn() const noexcept { return value_; }
  const DerivativeFn& derivative_fn() const noexcept { return derivative_; }

  // (delta z)_ts - (x1_ts zeta_s)^T
  Value remainder(const RoughLift& lift, double t, double s) const;
  // 2 kappa Hoelder norm of the remainder over grid pairs.
  double remainder_norm(const RoughLift& lift) const;

 private:
  GridPtr grid_;
  ValueFn value_;
  DerivativeFn derivative_;
  double kappa_;
};

// sigma(z) for a 1 x d controlled z; derivative column l is sum_m zeta^(m) (d_m sigma)_{., l}^T.
ControlledPath compose_sigma(const ControlledPath& z, const SigmaField& sigma);
// D sigma(z_s) r_ts + [delta sigma(z)_ts - D sigma(z_s) (delta z)_ts]
Value composed_remainder(const ControlledPath& z, const SigmaField& sigma, const RoughLift& lift, double t, double s);

// J_ts(d~x z)(xi_k) for an n x d path z, returned 1 x d.
SewingResult young_integral(const RoughLift& lift, const std::function<Value(double)>& z, double s, double t,
                            std::size_t k, int level, const SewingOptions& options = {});
// Compensated sums of x~1 z + x~2 . zeta^T for an n x d controlled z.
SewingResult rough_integral(const RoughLift& lift, const ControlledPath& z, double s, double t, std::size_t k,
                            int level, const SewingOptions& options = {});

// Second-order germ value for one pair; x2 is n x n, deriv[l] is n x n.
Value rough_germ(const Eigen::RowVectorXd& x1_tilde, const Eigen::MatrixXd& x2_tilde, const Value& z,
                 const std::vector<Value>& deriv);

// Laplace-indexed controlled path on a grid: ytilde[k] is (points x d), zeta[i] is n x d.
class LaplaceControlledPath {
 public:
  LaplaceControlledPath(GridPtr grid, MeasurePtr measure, std::vector<Eigen::MatrixXd> ytilde,
                        std::vector<Eigen::MatrixXd> zeta);

  const TimeGrid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  const KernelMeasure& measure() const noexcept { return *measure_; }
  const MeasurePtr& measure_ptr() const noexcept { return measure_; }
  Eigen::Index dims() const noexcept { return ytilde_.front().cols(); }
  Eigen::RowVectorXd ytilde(std::size_t k, std::size_t i) const { return ytilde_[k].row(static_cast<Eigen::Index>(i)); }
  const Eigen::MatrixXd& ytilde_table(std::size_t k) const { return ytilde_[k]; }
  const Eigen::MatrixXd& zeta(std::size_t i) const { return zeta_[i]; }

  // (delta~ y~)_ts(xi_k) on grid indices t >= s.
  Eigen::RowVectorXd delta_tilde(std::size_t k, std::size_t t, std::size_t s) const;
  // r~_ts(xi_k) = (delta~ y~)_ts - x~1_ts zeta_s
  Eigen::RowVectorXd remainder(const RoughLift& lift, std::size_t k, std::size_t t, std::size_t s) const;
  LaplaceIncrement1 as_increment() const;

 private:
  GridPtr grid_;
  MeasurePtr measure_;
  std::vector<Eigen::MatrixXd> ytilde_;
  std::vector<Eigen::MatrixXd> zeta_;
};

// y_t = a + sum_k w_k y~_t(xi_k), one row per grid point.
Eigen::MatrixXd project_y(const LaplaceControlledPath& ytilde, const Eigen::RowVectorXd& a);

// delta y_ts - f_ts = x1_ts zeta_s + r^y_ts around the anchor point a <= s <= t, with
// f_ts = sum_k w_k a_ts(xi_k) e^{-xi_k (s - a)} y~_a(xi_k).
struct LocalizedDecomposition {
  Eigen::RowVectorXd delta_y;
  Eigen::RowVectorXd f;
  Eigen::RowVectorXd x1_zeta;
  Eigen::RowVectorXd remainder;
};
LocalizedDecomposition localized_decomposition(const LaplaceControlledPath& ytilde, const RoughLift& lift,
                                               std::size_t anchor, std::size_t t, std::size_t s);

}  // namespace convrough
