#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include <Eigen/Dense>

#include "convrough/grid.hpp"

namespace convrough {

enum class DriverKind { deterministic, brownian, fbm };

const char* to_string(DriverKind kind);

// Piecewise-linear path through sampled points; row i of values is x at grid point i.
class DriverPath {
 public:
  DriverPath(std::shared_ptr<const TimeGrid> grid, Eigen::MatrixXd values, DriverKind kind = DriverKind::deterministic,
             double hurst = 0.0, std::uint64_t seed = 0);

  const TimeGrid& grid() const noexcept { return *grid_; }
  const std::shared_ptr<const TimeGrid>& grid_ptr() const noexcept { return grid_; }
  Eigen::Index dims() const noexcept { return values_.cols(); }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  // 1 x n slope of cell c.
  Eigen::RowVectorXd slope(std::size_t c) const { return slopes_.row(static_cast<Eigen::Index>(c)); }
  const Eigen::MatrixXd& slopes() const noexcept { return slopes_; }
  // Piecewise-linear value at any time in [0, T].
  Eigen::RowVectorXd operator()(double t) const;

  DriverKind kind() const noexcept { return kind_; }
  double hurst() const noexcept { return hurst_; }
  std::uint64_t seed() const noexcept { return seed_; }

  DriverPath scaled(double alpha) const;
  // Restriction to every `stride`-th grid point.
  DriverPath subsample(std::size_t stride) const;

 private:
  std::shared_ptr<const TimeGrid> grid_;
  Eigen::MatrixXd values_;
  Eigen::MatrixXd slopes_;
  DriverKind kind_;
  double hurst_;
  std::uint64_t seed_;
};

// Stream seed for sampler `counter` of a user seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t counter);

// fBm covariance R_H(t, s).
double fbm_covariance(double hurst, double t, double s);

inline constexpr std::size_t kCholeskyCap = 4096;

DriverPath sample_fbm(double hurst, std::shared_ptr<const TimeGrid> grid, Eigen::Index n_dims, std::uint64_t seed);
DriverPath sample_brownian(std::shared_ptr<const TimeGrid> grid, Eigen::Index n_dims, std::uint64_t seed);

struct SmoothFunction {
  std::string name;
  std::function<Eigen::RowVectorXd(double)> value;
  std::function<Eigen::RowVectorXd(double)> derivative;
  // int_s^t e^{-xi (t - v)} dx_v in closed form
  std::function<Eigen::RowVectorXd(double xi, double s, double t)> x1_tilde;
};

// "linear": x^i_t = c_i t; "sin": x^i_t = c_i sin(t); "zero": 0.
SmoothFunction smooth_function(const std::string& name, const Eigen::RowVectorXd& coefficients);
DriverPath sample_deterministic(const SmoothFunction& f, std::shared_ptr<const TimeGrid> grid);

// CSV with header t,x1,...,xn.
void write_driver_csv(const DriverPath& path, const std::string& file);
DriverPath read_driver_csv(const std::string& file);

}  // namespace convrough
