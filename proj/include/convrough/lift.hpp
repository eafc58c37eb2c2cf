#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "convrough/driver.hpp"
#include "convrough/increments.hpp"
#include "convrough/laplace.hpp"

namespace convrough {

struct LiftFlags {
  bool first_order = true;   // x~1 with delta~ x~1 = 0
  bool projected = true;     // x1 = project(x~1)
  bool second_order = true;  // x~2, x~3 with the Chen relation
};

// Exact convolutional lift of a piecewise-linear driver. Vectors are 1 x n rows,
// second-order objects are n x n with (a (x) b)_ij = a_i b_j.
class RoughLift {
 public:
  RoughLift(std::shared_ptr<const DriverPath> driver, MeasurePtr measure, double gamma, LiftFlags flags = {});

  const DriverPath& driver() const noexcept { return *driver_; }
  const std::shared_ptr<const DriverPath>& driver_ptr() const noexcept { return driver_; }
  const KernelMeasure& measure() const noexcept { return *measure_; }
  const MeasurePtr& measure_ptr() const noexcept { return measure_; }
  const TimeGrid& grid() const noexcept { return driver_->grid(); }
  double gamma() const noexcept { return gamma_; }
  const LiftFlags& flags() const noexcept { return flags_; }
  Eigen::Index dims() const noexcept { return driver_->dims(); }

  Eigen::RowVectorXd x1_tilde(double s, double t, std::size_t k) const;
  Eigen::RowVectorXd x1(double s, double t) const;
  Eigen::MatrixXd x2_tilde(double s, double t, std::size_t k) const;
  std::vector<Eigen::MatrixXd> x2_tilde_all(double s, double t) const;
  Eigen::MatrixXd x3_tilde(double t, double u, double s, std::size_t k) const;
  // X4_ts(xi_k, eta_l) = int_s^t e^{-xi_k (t - v)} a_vs(eta_l) dx_v
  Eigen::RowVectorXd x4(double s, double t, std::size_t k, std::size_t l) const;
  // sum_l w_l X4_tu(xi_k, eta_l) (x) x~1_us(eta_l)
  Eigen::MatrixXd x3_tilde_direct(double t, double u, double s, std::size_t k) const;

  // Values over a sub-interval of length delta inside cell c.
  Eigen::RowVectorXd cell_x1(std::size_t c, double delta, std::size_t k) const;
  Eigen::MatrixXd cell_x2(std::size_t c, double delta, std::size_t k) const;
  double decay(std::size_t k, double delta) const;

  // x~1_{t_j s}(xi_k) for grid indices j = s_index..end_index.
  std::vector<Eigen::RowVectorXd> x1_tilde_row(std::size_t s_index, std::size_t end_index, std::size_t k) const;

  // Views as Laplace increments on the driver grid; the lift must outlive them.
  LaplaceIncrement2 x1_tilde_increment() const;
  Increment2 x1_increment() const;
  LaplaceIncrement2 x2_tilde_increment() const;
  LaplaceIncrement3 x3_tilde_increment() const;
  DoubleLaplaceIncrement2 x4_increment() const;

  std::size_t x2_cache_size() const;

  struct Coefficients {
    std::vector<double> decay;          // e^{-xi_k D}
    std::vector<double> first;          // I(xi_k, 0; D)
    std::vector<double> second;         // I(xi_k, eta_l; D), k-major
    std::vector<double> third;          // I(xi_k, eta_l, 0; D), k-major
    std::vector<double> weighted_third; // sum_l w_l I(xi_k, eta_l, 0; D)
  };
  const Coefficients& coefficients(double delta) const;

 private:
  template <class Visit>
  void for_each_piece(double s, double t, Visit&& visit) const;

  std::shared_ptr<const DriverPath> driver_;
  MeasurePtr measure_;
  double gamma_;
  LiftFlags flags_;
  mutable std::mutex mutex_;
  mutable std::map<double, std::unique_ptr<Coefficients>> coeffs_;
  mutable std::map<std::pair<double, double>, std::vector<Eigen::MatrixXd>> x2_cache_;
};

// Left-point (Ito) approximation of x~2 on a Brownian path, using `refinement` equal steps
// between grid points s and t of `fine`.
Eigen::MatrixXd lift_ito_x2(const DriverPath& fine, const KernelMeasure& measure, double s, double t, std::size_t k,
                            std::size_t refinement);

// c_H int_s^t int_u^v e^{-xi (t - a)} e^{-eta (v - b)} |a - b|^{2H - 2} db da
double wiener_cov_x1(double hurst, double xi, double eta, std::pair<double, double> st, std::pair<double, double> uv);

}  // namespace convrough
