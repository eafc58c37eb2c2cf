#include "convrough/lift.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "convrough/errors.hpp"
#include "convrough/expint.hpp"

namespace convrough {

RoughLift::RoughLift(std::shared_ptr<const DriverPath> driver, MeasurePtr measure, double gamma, LiftFlags flags)
    : driver_(std::move(driver)), measure_(std::move(measure)), gamma_(gamma), flags_(flags) {
  if (!driver_ || !measure_) throw InvalidInput("lift needs a driver and a measure");
  if (measure_->size() == 0) throw InvalidInput("lift needs a nonempty measure");
  if (!(gamma_ > 0.0 && gamma_ <= 1.0)) throw InvalidInput("declared regularity must lie in (0, 1]");
}

const RoughLift::Coefficients& RoughLift::coefficients(double delta) const {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = coeffs_.find(delta);
    if (it != coeffs_.end()) return *it->second;
  }
  const std::size_t K = measure_->size();
  auto c = std::make_unique<Coefficients>();
  c->decay.resize(K);
  c->first.resize(K);
  c->second.resize(K * K);
  c->third.resize(K * K);
  c->weighted_third.assign(K, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    double xi = measure_->xi(k);
    c->decay[k] = xi == 0.0 ? 1.0 : std::exp(-xi * delta);
    c->first[k] = xi == 0.0 ? delta : exp_int(xi, 0.0, delta);
    for (std::size_t l = 0; l < K; ++l) {
      double eta = measure_->xi(l);
      double second, third;
      if (xi == 0.0 && eta == 0.0) {
        second = delta;
        third = 0.5 * delta * delta;
      } else {
        Eigen::MatrixXd e = iterated_exp_int_matrix({xi, eta, 0.0}, delta);
        second = exp_int(xi, eta, delta);
        third = e(0, 2);
      }
      c->second[k * K + l] = second;
      c->third[k * K + l] = third;
      c->weighted_third[k] += measure_->weight(l) * third;
    }
  }
  std::lock_guard<std::mutex> lock(mutex_);
  auto [it, inserted] = coeffs_.emplace(delta, std::move(c));
  return *it->second;
}

template <class Visit>
void RoughLift::for_each_piece(double s, double t, Visit&& visit) const {
  if (t < s) throw InvalidInput("lift needs s <= t");
  const TimeGrid& g = grid();
  if (s < 0.0 || t > g.horizon()) throw InvalidInput("lift arguments outside the driver horizon");
  if (t == s) return;
  std::size_t c = g.cell_of(s);
  double a = s;
  while (a < t) {
    if (c >= g.cells()) break;
    double b = std::min(t, g[c + 1]);
    if (b > a) visit(c, a, b);
    a = b;
    ++c;
  }
}

Eigen::RowVectorXd RoughLift::x1_tilde(double s, double t, std::size_t k) const {
  if (k >= measure_->size()) throw InvalidInput("atom index out of range");
  Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(dims());
  for_each_piece(s, t, [&](std::size_t c, double a, double b) {
    const Coefficients& co = coefficients(b - a);
    x = co.decay[k] * x + driver_->slope(c) * co.first[k];
  });
  return x;
}

Eigen::RowVectorXd RoughLift::x1(double s, double t) const {
  Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(dims());
  for (std::size_t k = 0; k < measure_->size(); ++k) out += measure_->weight(k) * x1_tilde(s, t, k);
  return out;
}

std::vector<Eigen::MatrixXd> RoughLift::x2_tilde_all(double s, double t) const {
  auto key = std::make_pair(s, t);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = x2_cache_.find(key);
    if (it != x2_cache_.end()) return it->second;
  }
  const std::size_t K = measure_->size();
  const Eigen::Index n = dims();
  std::vector<Eigen::MatrixXd> S(K, Eigen::MatrixXd::Zero(n, n));
  std::vector<Eigen::RowVectorXd> X(K, Eigen::RowVectorXd::Zero(n));
  for_each_piece(s, t, [&](std::size_t c, double a, double b) {
    const Coefficients& co = coefficients(b - a);
    Eigen::RowVectorXd m = driver_->slope(c);
    Eigen::MatrixXd mm = m.transpose() * m;
    for (std::size_t k = 0; k < K; ++k) {
      Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(n);
      for (std::size_t l = 0; l < K; ++l) v += (measure_->weight(l) * co.second[k * K + l]) * X[l];
      S[k] = co.decay[k] * S[k] + m.transpose() * v + mm * co.weighted_third[k];
    }
    for (std::size_t l = 0; l < K; ++l) X[l] = co.decay[l] * X[l] + m * co.first[l];
  });
  std::lock_guard<std::mutex> lock(mutex_);
  x2_cache_.emplace(key, S);
  return S;
}

Eigen::MatrixXd RoughLift::x2_tilde(double s, double t, std::size_t k) const {
  if (k >= measure_->size()) throw InvalidInput("atom index out of range");
  return x2_tilde_all(s, t)[k];
}

Eigen::MatrixXd RoughLift::x3_tilde(double t, double u, double s, std::size_t k) const {
  if (!(s <= u && u <= t)) throw InvalidInput("x~3 needs s <= u <= t");
  const Eigen::Index n = dims();
  if (u == s || u == t) return Eigen::MatrixXd::Zero(n, n);
  double xi = measure_->xi(k);
  Eigen::MatrixXd chen = x2_tilde(s, t, k) - x2_tilde(u, t, k) - std::exp(-xi * (t - u)) * x2_tilde(s, u, k);
  return chen - x1_tilde(u, t, k).transpose() * x1(s, u);
}

Eigen::RowVectorXd RoughLift::x4(double s, double t, std::size_t k, std::size_t l) const {
  const std::size_t K = measure_->size();
  if (k >= K || l >= K) throw InvalidInput("atom index out of range");
  double eta = measure_->xi(l);
  Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(dims());
  if (eta == 0.0) return x;
  for_each_piece(s, t, [&](std::size_t c, double a, double b) {
    const Coefficients& co = coefficients(b - a);
    double weight = std::expm1(-eta * (a - s)) * co.second[k * K + l] - eta * co.third[k * K + l];
    x = co.decay[k] * x + driver_->slope(c) * weight;
  });
  return x;
}

Eigen::MatrixXd RoughLift::x3_tilde_direct(double t, double u, double s, std::size_t k) const {
  if (!(s <= u && u <= t)) throw InvalidInput("x~3 needs s <= u <= t");
  const Eigen::Index n = dims();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t l = 0; l < measure_->size(); ++l)
    out += measure_->weight(l) * (x4(u, t, k, l).transpose() * x1_tilde(s, u, l));
  return out;
}

Eigen::RowVectorXd RoughLift::cell_x1(std::size_t c, double delta, std::size_t k) const {
  return driver_->slope(c) * coefficients(delta).first[k];
}

Eigen::MatrixXd RoughLift::cell_x2(std::size_t c, double delta, std::size_t k) const {
  Eigen::RowVectorXd m = driver_->slope(c);
  return (m.transpose() * m) * coefficients(delta).weighted_third[k];
}

double RoughLift::decay(std::size_t k, double delta) const { return coefficients(delta).decay[k]; }

std::vector<Eigen::RowVectorXd> RoughLift::x1_tilde_row(std::size_t s_index, std::size_t end_index,
                                                        std::size_t k) const {
  const TimeGrid& g = grid();
  std::vector<Eigen::RowVectorXd> row;
  Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(dims());
  row.push_back(x);
  for (std::size_t c = s_index; c < end_index; ++c) {
    const Coefficients& co = coefficients(g[c + 1] - g[c]);
    x = co.decay[k] * x + driver_->slope(c) * co.first[k];
    row.push_back(x);
  }
  return row;
}

LaplaceIncrement2 RoughLift::x1_tilde_increment() const {
  const RoughLift* self = this;
  return LaplaceIncrement2(driver_->grid_ptr(), measure_, {1, dims()},
                           [self](std::size_t k, double t, double s) -> Value { return self->x1_tilde(s, t, k); });
}

Increment2 RoughLift::x1_increment() const {
  const RoughLift* self = this;
  return Increment2(driver_->grid_ptr(), {1, dims()}, [self](double t, double s) -> Value { return self->x1(s, t); });
}

LaplaceIncrement2 RoughLift::x2_tilde_increment() const {
  const RoughLift* self = this;
  return LaplaceIncrement2(driver_->grid_ptr(), measure_, {dims(), dims()},
                           [self](std::size_t k, double t, double s) -> Value { return self->x2_tilde(s, t, k); });
}

LaplaceIncrement3 RoughLift::x3_tilde_increment() const {
  const RoughLift* self = this;
  return LaplaceIncrement3(driver_->grid_ptr(), measure_, {dims(), dims()},
                           [self](std::size_t k, double t, double u, double s) -> Value {
                             return self->x3_tilde(t, u, s, k);
                           });
}

DoubleLaplaceIncrement2 RoughLift::x4_increment() const {
  const RoughLift* self = this;
  return DoubleLaplaceIncrement2(driver_->grid_ptr(), measure_, measure_, {1, dims()},
                                 [self](std::size_t k, std::size_t l, double t, double s) -> Value {
                                   return self->x4(s, t, k, l);
                                 });
}

std::size_t RoughLift::x2_cache_size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return x2_cache_.size();
}

Eigen::MatrixXd lift_ito_x2(const DriverPath& fine, const KernelMeasure& measure, double s, double t, std::size_t k,
                            std::size_t refinement) {
  bool brownian = fine.kind() == DriverKind::brownian || (fine.kind() == DriverKind::fbm && fine.hurst() == 0.5);
  if (!brownian) throw InvalidInput("Ito lift needs a Brownian driver");
  if (k >= measure.size()) throw InvalidInput("atom index out of range");
  if (refinement == 0) throw InvalidInput("refinement must be positive");
  const TimeGrid& g = fine.grid();
  std::size_t si = g.index_of(s), ti = g.index_of(t);
  if (si == TimeGrid::npos || ti == TimeGrid::npos || ti < si) throw InvalidInput("Ito lift needs grid points s <= t");
  if ((ti - si) % refinement != 0) throw InvalidInput("refinement must divide the number of fine cells in [s, t]");
  std::size_t stride = (ti - si) / refinement;
  const std::size_t K = measure.size();
  const Eigen::Index n = fine.dims();
  double xi = measure.xi(k);
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
  std::vector<Eigen::RowVectorXd> X(K, Eigen::RowVectorXd::Zero(n));
  for (std::size_t i = si; i < ti; i += stride) {
    auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(i + stride);
    Eigen::RowVectorXd dx = fine.values().row(b) - fine.values().row(a);
    Eigen::RowVectorXd x1 = Eigen::RowVectorXd::Zero(n);
    for (std::size_t l = 0; l < K; ++l) x1 += measure.weight(l) * X[l];
    S += std::exp(-xi * (t - g[i])) * (dx.transpose() * x1);
    double h = g[i + stride] - g[i];
    for (std::size_t l = 0; l < K; ++l) X[l] = std::exp(-measure.xi(l) * h) * (X[l] + dx);
  }
  return S;
}

double wiener_cov_x1(double hurst, double xi, double eta, std::pair<double, double> st, std::pair<double, double> uv) {
  if (!(hurst > 0.5 && hurst < 1.0)) throw InvalidInput("Wiener covariance needs 1/2 < H < 1");
  auto [s, t] = st;
  auto [u, v] = uv;
  if (!(t >= s) || !(v >= u) || s < 0.0 || u < 0.0) throw InvalidInput("Wiener covariance needs ordered nonnegative intervals");
  if (t == s || v == u) return 0.0;
  const double alpha = 2.0 * hurst - 2.0;
  const double c_h = hurst * (2.0 * hurst - 1.0);
  const double tol = 1e-13;
  boost::math::quadrature::tanh_sinh<double> inner_rule;
  boost::math::quadrature::tanh_sinh<double> outer_rule;
  // Inner integrals in the gap variable r = |a - b| so the r^alpha singularity sits at an exact endpoint.
  auto inner = [&](double a) {
    double total = 0.0;
    if (a > u) {
      double lo = std::max(0.0, a - v), hi = a - u;
      total += inner_rule.integrate([&](double r) { return r == 0.0 ? 0.0 : std::exp(-eta * (v - a + r)) * std::pow(r, alpha); },
                                    lo, hi, tol);
    }
    if (a < v) {
      double lo = std::max(0.0, u - a), hi = v - a;
      total += inner_rule.integrate([&](double r) { return r == 0.0 ? 0.0 : std::exp(-eta * (v - a - r)) * std::pow(r, alpha); },
                                    lo, hi, tol);
    }
    return std::exp(-xi * (t - a)) * total;
  };
  std::vector<double> breaks{s};
  for (double p : {u, v})
    if (p > s && p < t) breaks.push_back(p);
  breaks.push_back(t);
  std::sort(breaks.begin(), breaks.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) total += outer_rule.integrate(inner, breaks[i], breaks[i + 1], tol);
  return c_h * total;
}

}  // namespace convrough
