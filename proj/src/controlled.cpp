#include "convrough/controlled.hpp"

#include <algorithm>
#include <cmath>

#include "convrough/errors.hpp"

namespace convrough {

ControlledPath::ControlledPath(GridPtr grid, ValueFn value, DerivativeFn derivative, double kappa)
    : grid_(std::move(grid)), value_(std::move(value)), derivative_(std::move(derivative)), kappa_(kappa) {
  if (!grid_) throw InvalidInput("controlled path needs a grid");
  if (!value_ || !derivative_) throw InvalidInput("controlled path needs value and derivative evaluators");
  if (!(kappa_ > 0.0 && kappa_ <= 1.0)) throw InvalidInput("kappa must lie in (0, 1]");
}

ControlledPath ControlledPath::sampled(GridPtr grid, std::vector<Value> values,
                                       std::vector<std::vector<Value>> derivatives, double kappa) {
  if (!grid) throw InvalidInput("controlled path needs a grid");
  if (values.size() != grid->size() || derivatives.size() != grid->size())
    throw InvalidInput("sampled controlled path needs one value and one derivative per grid point");
  auto vals = std::make_shared<std::vector<Value>>(std::move(values));
  auto ders = std::make_shared<std::vector<std::vector<Value>>>(std::move(derivatives));
  auto lookup = [grid](double t) {
    std::size_t i = grid->index_of(t);
    if (i == TimeGrid::npos) throw InvalidInput("sampled controlled path evaluated off the grid");
    return i;
  };
  return ControlledPath(
      grid, [vals, lookup](double t) { return (*vals)[lookup(t)]; },
      [ders, lookup](double t) { return (*ders)[lookup(t)]; }, kappa);
}

ControlledPath ControlledPath::from_row(GridPtr grid, ValueFn y, std::function<Value(double)> zeta, double kappa) {
  auto derivative = [zeta](double t) {
    Value z = zeta(t);
    std::vector<Value> out;
    out.reserve(static_cast<std::size_t>(z.cols()));
    for (Eigen::Index l = 0; l < z.cols(); ++l) out.emplace_back(z.col(l));
    return out;
  };
  return ControlledPath(std::move(grid), std::move(y), derivative, kappa);
}

Value ControlledPath::remainder(const RoughLift& lift, double t, double s) const {
  if (t < s) throw InvalidInput("remainder needs s <= t");
  Value out = value_(t) - value_(s);
  Eigen::RowVectorXd x1 = lift.x1(s, t);
  std::vector<Value> d = derivative_(s);
  if (static_cast<Eigen::Index>(d.size()) != out.cols()) throw InvalidInput("derivative has the wrong column count");
  for (std::size_t l = 0; l < d.size(); ++l) {
    if (d[l].rows() != x1.size() || d[l].cols() != out.rows())
      throw InvalidInput("derivative column has the wrong shape");
    out.col(static_cast<Eigen::Index>(l)) -= (x1 * d[l]).transpose();
  }
  return out;
}

double ControlledPath::remainder_norm(const RoughLift& lift) const {
  const TimeGrid& g = *grid_;
  double best = 0.0;
  for (std::size_t s = 0; s < g.size(); ++s)
    for (std::size_t t = s + 1; t < g.size(); ++t) {
      double r = remainder(lift, g[t], g[s]).norm() / std::pow(g[t] - g[s], 2.0 * kappa_);
      best = std::max(best, r);
    }
  return best;
}

ControlledPath compose_sigma(const ControlledPath& z, const SigmaField& sigma) {
  auto sig = std::make_shared<SigmaField>(sigma);
  auto zv = z.value_fn();
  auto zd = z.derivative_fn();
  auto value = [sig, zv](double t) -> Value {
    Value y = zv(t);
    if (y.rows() != 1) throw InvalidInput("compose_sigma needs a row path");
    return (*sig)(y.row(0));
  };
  auto derivative = [sig, zv, zd](double t) {
    Value y = zv(t);
    std::vector<Value> zeta = zd(t);
    std::vector<Eigen::MatrixXd> jac = sig->jacobian(y.row(0));
    const Eigen::Index n = sig->n(), d = sig->d();
    if (static_cast<Eigen::Index>(zeta.size()) != d) throw InvalidInput("derivative count must equal d");
    std::vector<Value> out(static_cast<std::size_t>(d));
    for (Eigen::Index l = 0; l < d; ++l) {
      Value acc = Value::Zero(zeta.front().rows(), n);
      for (Eigen::Index m = 0; m < d; ++m)
        acc += zeta[static_cast<std::size_t>(m)] * jac[static_cast<std::size_t>(m)].col(l).transpose();
      out[static_cast<std::size_t>(l)] = acc;
    }
    return out;
  };
  return ControlledPath(z.grid_ptr(), value, derivative, z.kappa());
}

Value composed_remainder(const ControlledPath& z, const SigmaField& sigma, const RoughLift& lift, double t, double s) {
  Value r = z.remainder(lift, t, s);
  Eigen::RowVectorXd ys = z.value(s).row(0), yt = z.value(t).row(0);
  std::vector<Eigen::MatrixXd> jac = sigma.jacobian(ys);
  Value out = sigma(yt) - sigma(ys);
  for (Eigen::Index m = 0; m < sigma.d(); ++m)
    out += jac[static_cast<std::size_t>(m)] * (r(0, m) - (yt(m) - ys(m)));
  return out;
}

Value rough_germ(const Eigen::RowVectorXd& x1_tilde, const Eigen::MatrixXd& x2_tilde, const Value& z,
                 const std::vector<Value>& deriv) {
  Value out = x1_tilde * z;
  for (std::size_t l = 0; l < deriv.size(); ++l)
    out(0, static_cast<Eigen::Index>(l)) += trace_pair(x2_tilde, deriv[l].transpose());
  return out;
}

SewingResult young_integral(const RoughLift& lift, const std::function<Value(double)>& z, double s, double t,
                            std::size_t k, int level, const SewingOptions& options) {
  if (!lift.flags().first_order) throw InvalidInput("young integral needs a first-order lift");
  if (!(lift.gamma() > 0.5)) throw InvalidInput("young integral needs gamma > 1/2");
  if (k >= lift.measure().size()) throw InvalidInput("atom index out of range");
  Germ germ = [&](double b, double a) -> Value { return lift.x1_tilde(a, b, k) * z(a); };
  return compensated_sum_tilde(germ, lift.measure().xi(k), s, t, level, options);
}

SewingResult rough_integral(const RoughLift& lift, const ControlledPath& z, double s, double t, std::size_t k,
                            int level, const SewingOptions& options) {
  if (!lift.flags().second_order) throw InvalidInput("rough integral needs a second-order lift");
  if (!(lift.gamma() > 1.0 / 3.0)) throw InvalidInput("rough integral needs gamma > 1/3");
  if (!(z.kappa() > 1.0 / 3.0 && z.kappa() <= lift.gamma()))
    throw InvalidInput("rough integral needs 1/3 < kappa <= gamma");
  if (k >= lift.measure().size()) throw InvalidInput("atom index out of range");
  Germ germ = [&](double b, double a) -> Value {
    return rough_germ(lift.x1_tilde(a, b, k), lift.x2_tilde(a, b, k), z.value(a), z.derivative(a));
  };
  return compensated_sum_tilde(germ, lift.measure().xi(k), s, t, level, options);
}

LaplaceControlledPath::LaplaceControlledPath(GridPtr grid, MeasurePtr measure, std::vector<Eigen::MatrixXd> ytilde,
                                             std::vector<Eigen::MatrixXd> zeta)
    : grid_(std::move(grid)), measure_(std::move(measure)), ytilde_(std::move(ytilde)), zeta_(std::move(zeta)) {
  if (!grid_ || !measure_) throw InvalidInput("Laplace controlled path needs a grid and a measure");
  if (ytilde_.size() != measure_->size() || ytilde_.empty())
    throw InvalidInput("Laplace controlled path needs one table per atom");
  for (const auto& t : ytilde_)
    if (static_cast<std::size_t>(t.rows()) != grid_->size() || t.cols() != ytilde_.front().cols())
      throw InvalidInput("Laplace controlled path tables must be points x d");
  if (zeta_.size() != grid_->size()) throw InvalidInput("Laplace controlled path needs one zeta per grid point");
}

Eigen::RowVectorXd LaplaceControlledPath::delta_tilde(std::size_t k, std::size_t t, std::size_t s) const {
  if (t < s) throw InvalidInput("delta~ needs s <= t");
  Eigen::RowVectorXd ys = ytilde(k, s);
  return ytilde(k, t) - ys - twist(measure_->xi(k), (*grid_)[s], (*grid_)[t]) * ys;
}

Eigen::RowVectorXd LaplaceControlledPath::remainder(const RoughLift& lift, std::size_t k, std::size_t t,
                                                    std::size_t s) const {
  const TimeGrid& g = *grid_;
  return delta_tilde(k, t, s) - lift.x1_tilde(g[s], g[t], k) * zeta_[s];
}

LaplaceIncrement1 LaplaceControlledPath::as_increment() const {
  std::vector<std::vector<Value>> values(ytilde_.size());
  for (std::size_t k = 0; k < ytilde_.size(); ++k) {
    values[k].reserve(grid_->size());
    for (std::size_t i = 0; i < grid_->size(); ++i) values[k].emplace_back(ytilde(k, i));
  }
  return LaplaceIncrement1(grid_, measure_, std::move(values));
}

Eigen::MatrixXd project_y(const LaplaceControlledPath& ytilde, const Eigen::RowVectorXd& a) {
  if (a.size() != ytilde.dims()) throw InvalidInput("initial condition has the wrong dimension");
  const KernelMeasure& m = ytilde.measure();
  Eigen::MatrixXd y = a.replicate(static_cast<Eigen::Index>(ytilde.grid().size()), 1);
  for (std::size_t k = 0; k < m.size(); ++k) y += m.weight(k) * ytilde.ytilde_table(k);
  return y;
}

LocalizedDecomposition localized_decomposition(const LaplaceControlledPath& ytilde, const RoughLift& lift,
                                               std::size_t anchor, std::size_t t, std::size_t s) {
  if (!(anchor <= s && s <= t)) throw InvalidInput("localized decomposition needs anchor <= s <= t");
  const TimeGrid& g = ytilde.grid();
  const KernelMeasure& m = ytilde.measure();
  const Eigen::Index d = ytilde.dims();
  LocalizedDecomposition out{Eigen::RowVectorXd::Zero(d), Eigen::RowVectorXd::Zero(d), Eigen::RowVectorXd::Zero(d),
                             Eigen::RowVectorXd::Zero(d)};
  for (std::size_t k = 0; k < m.size(); ++k) {
    double xi = m.xi(k), w = m.weight(k);
    double a_ts = twist(xi, g[s], g[t]);
    out.delta_y += w * (ytilde.ytilde(k, t) - ytilde.ytilde(k, s));
    out.f += w * a_ts * std::exp(-xi * (g[s] - g[anchor])) * ytilde.ytilde(k, anchor);
    out.remainder += w * (ytilde.remainder(lift, k, t, s) + a_ts * ytilde.delta_tilde(k, s, anchor));
  }
  out.x1_zeta = lift.x1(g[s], g[t]) * ytilde.zeta(s);
  return out;
}

}  // namespace convrough
