#include "convrough/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "convrough/errors.hpp"
#include "convrough/kernels.hpp"

namespace convrough {

namespace {

struct StepCoefficients {
  std::vector<double> decay;  // e^{-xi_k h}
  std::vector<double> first;  // x~1 per unit slope
  std::vector<double> area;   // x~2 per unit slope outer product
  std::vector<double> drift;  // w_l X4(xi_k, eta_l) per unit slope, k-major
};

// What the Picard engine needs from the kernel side.
struct Model {
  const DriverPath* driver = nullptr;
  std::vector<double> xi;
  std::vector<double> weight;
  std::vector<double> lbeta;
  std::vector<double> l1;
  MeasurePtr measure;
  std::function<StepCoefficients(double h)> coefficients;
  // x~1_{t_j s}(xi_k) for driver indices j = s..e
  std::function<std::vector<Eigen::RowVectorXd>(std::size_t s, std::size_t e, std::size_t k)> x1_row;
};

struct Iterate {
  std::vector<double> yt;  // (len K d), index (i K + k) d + l
  Eigen::MatrixXd y;       // len x d
  std::vector<Eigen::MatrixXd> zeta;
};

class Engine {
 public:
  Engine(const Model& model, const SigmaField& sigma, const Eigen::RowVectorXd& a, const SolverConfig& config,
         bool young)
      : model_(model), sigma_(sigma), a_(a), config_(config), young_(young) {
    const DriverPath& x = *model_.driver;
    if (a_.size() != sigma_.d()) throw InvalidInput("initial condition must have sigma's d columns");
    if (sigma_.n() != x.dims()) throw InvalidInput("sigma rows must match the driver dimension");
    if (!(config_.tolerance > 0.0)) throw InvalidInput("solver tolerance must be positive");
    if (config_.max_iterations < 2) throw InvalidInput("solver needs at least two Picard iterations");
    if (config_.sub_level < 0 || config_.sub_level > 20) throw InvalidInput("sub_level must lie in [0, 20]");
    if (config_.n_start < 1 || config_.n_cap < config_.n_start) throw InvalidInput("need 1 <= n_start <= n_cap");
    if (young_) {
      if (!(config_.gamma > 0.5 && config_.gamma <= 1.0)) throw InvalidInput("young solver needs 1/2 < gamma <= 1");
      theta_ = config_.gamma;
    } else {
      if (!(config_.kappa > 1.0 / 3.0 && config_.kappa < config_.gamma && config_.gamma <= 1.0))
        throw InvalidInput("rough solver needs 1/3 < kappa < gamma <= 1");
      theta_ = config_.kappa;
    }
    K_ = model_.xi.size();
    d_ = a_.size();
    n_ = x.dims();
    S_ = std::size_t{1} << config_.sub_level;
    const TimeGrid& g = x.grid();
    cells_ = g.cells();
    M_ = cells_ * S_ + 1;
    mesh_.resize(M_);
    cell_.reserve(cells_);
    decay_.resize(cells_);
    for (std::size_t c = 0; c < cells_; ++c) {
      double h = (g[c + 1] - g[c]) / static_cast<double>(S_);
      for (std::size_t i = 0; i < S_; ++i) mesh_[c * S_ + i] = g[c] + static_cast<double>(i) * h;
      cell_.push_back(model_.coefficients(h));
      decay_[c].resize(K_ * static_cast<std::size_t>(d_));
      for (std::size_t k = 0; k < K_; ++k)
        for (Eigen::Index l = 0; l < d_; ++l) decay_[c][k * d_ + l] = cell_[c].decay[k];
    }
    mesh_[M_ - 1] = g.horizon();
  }

  Solution run(const SolveRange& range, const std::string& mode) {
    const TimeGrid& g = model_.driver->grid();
    std::size_t first = range.start;
    std::size_t last = range.end == TimeGrid::npos ? g.size() - 1 : range.end;
    if (!(first < last && last < g.size())) throw InvalidInput("solve range must satisfy start < end <= last point");
    if (!range.ytilde.empty() && range.ytilde.size() != K_) throw InvalidInput("start state needs one row per atom");

    const std::size_t Kd = K_ * static_cast<std::size_t>(d_);
    yt_.assign(M_ * Kd, 0.0);
    y_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(M_), d_);
    zeta_.assign(M_, Eigen::MatrixXd::Zero(n_, d_));
    std::size_t j0 = first * S_;
    for (std::size_t k = 0; k < range.ytilde.size(); ++k) {
      if (range.ytilde[k].size() != d_) throw InvalidInput("start state rows must have d entries");
      for (Eigen::Index l = 0; l < d_; ++l) yt_[j0 * Kd + k * d_ + l] = range.ytilde[k](l);
    }
    y_.row(static_cast<Eigen::Index>(j0)) = project(&yt_[j0 * Kd]);

    Solution sol;
    sol.mode = mode;
    sol.alpha2 = std::isnan(config_.alpha2) ? (config_.gamma - config_.kappa) / 4.0 : config_.alpha2;
    sol.alpha1 = std::isnan(config_.alpha1) ? 1.0 + sol.alpha2 - (config_.gamma + config_.kappa) / 2.0 : config_.alpha1;
    sol.window_ok = sol.alpha2 > 0.0 && sol.alpha2 < (config_.gamma - config_.kappa) / 2.0 &&
                    sol.alpha2 - config_.gamma < sol.alpha1 - 1.0 && sol.alpha1 - 1.0 < sol.alpha2 - config_.kappa;

    std::size_t N = config_.n_start;
    std::size_t n = 0;
    std::size_t i = first;
    int reruns = 0;
    std::ostringstream trace;
    while (i < last) {
      double eps = young_ ? g.horizon() / static_cast<double>(N) : 1.0 / static_cast<double>(N + n);
      double target = g[i] + eps;
      auto it = std::lower_bound(g.points().begin(), g.points().end(), target - 1e-12 * std::max(1.0, target));
      std::size_t e = static_cast<std::size_t>(it - g.points().begin());
      e = std::clamp(e, i + 1, last);
      IntervalDiagnostics diag;
      Iterate result;
      bool ok = picard(i, e, diag, result);
      trace << "[" << g[i] << ", " << g[e] << "] N=" << N << " iterations=" << diag.iterations
            << " contraction=" << diag.contraction << " difference=" << diag.last_difference << "\n";
      if (!ok) {
        N *= 2;
        ++reruns;
        if (N > config_.n_cap) throw SolverFailure("no contraction below the interval cap:\n" + trace.str());
        continue;
      }
      commit(i, e, result);
      diag.start = i;
      diag.end = e;
      diag.t0 = g[i];
      diag.t1 = g[e];
      diag.n_param = N;
      diag.index = n;
      diag.reruns = reruns;
      if (config_.diagnostics) norms(i, e, diag, sol);
      sol.total_iterations += diag.iterations;
      sol.intervals.push_back(diag);
      reruns = 0;
      i = e;
      ++n;
    }

    sol.grid = model_.driver->grid_ptr();
    sol.measure = model_.measure;
    sol.a = a_;
    sol.first = first;
    sol.last = last;
    sol.final_n = N;
    sol.sub_level = config_.sub_level;
    sol.mesh = mesh_;
    sol.mesh_ytilde.assign(K_, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(M_), d_));
    for (std::size_t j = j0; j <= last * S_; ++j)
      for (std::size_t k = 0; k < K_; ++k)
        for (Eigen::Index l = 0; l < d_; ++l)
          sol.mesh_ytilde[k](static_cast<Eigen::Index>(j), l) = yt_[j * Kd + k * d_ + l];
    sol.mesh_y = y_;
    sol.mesh_zeta = zeta_;
    std::vector<Eigen::MatrixXd> tables(K_, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.size()), d_));
    std::vector<Eigen::MatrixXd> zeta(g.size(), Eigen::MatrixXd::Zero(n_, d_));
    sol.y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.size()), d_);
    for (std::size_t p = first; p <= last; ++p) {
      auto row = static_cast<Eigen::Index>(p * S_);
      for (std::size_t k = 0; k < K_; ++k) tables[k].row(static_cast<Eigen::Index>(p)) = sol.mesh_ytilde[k].row(row);
      zeta[p] = zeta_[p * S_];
      sol.y.row(static_cast<Eigen::Index>(p)) = y_.row(row);
    }
    sol.path = std::make_shared<LaplaceControlledPath>(sol.grid, model_.measure, std::move(tables), std::move(zeta));
    return sol;
  }

 private:
  Eigen::RowVectorXd project(const double* state) const {
    Eigen::RowVectorXd y = a_;
    for (std::size_t k = 0; k < K_; ++k)
      for (Eigen::Index l = 0; l < d_; ++l) y(l) += model_.weight[k] * state[k * d_ + l];
    return y;
  }

  Iterate frozen(std::size_t j0, std::size_t j1) const {
    const std::size_t len = j1 - j0 + 1, Kd = K_ * static_cast<std::size_t>(d_);
    Iterate it;
    it.yt.resize(len * Kd);
    it.y.resize(static_cast<Eigen::Index>(len), d_);
    Eigen::MatrixXd z0 = sigma_(y_.row(static_cast<Eigen::Index>(j0)));
    it.zeta.assign(len, z0);
    for (std::size_t i = 0; i < len; ++i) {
      double lag = mesh_[j0 + i] - mesh_[j0];
      for (std::size_t k = 0; k < K_; ++k) {
        double f = std::exp(-model_.xi[k] * lag);
        for (Eigen::Index l = 0; l < d_; ++l) it.yt[i * Kd + k * d_ + l] = f * yt_[j0 * Kd + k * d_ + l];
      }
      it.y.row(static_cast<Eigen::Index>(i)) = project(&it.yt[i * Kd]);
    }
    return it;
  }

  Iterate sweep(std::size_t j0, std::size_t j1, const Iterate& old) const {
    const std::size_t len = j1 - j0 + 1, Kd = K_ * static_cast<std::size_t>(d_);
    const kernels::Table& kt = kernels::active();
    const Eigen::MatrixXd& slopes = model_.driver->slopes();
    Iterate out;
    out.yt.resize(len * Kd);
    out.y.resize(static_cast<Eigen::Index>(len), d_);
    out.zeta.resize(len);
    std::vector<double> state(yt_.begin() + static_cast<std::ptrdiff_t>(j0 * Kd),
                              yt_.begin() + static_cast<std::ptrdiff_t>((j0 + 1) * Kd));
    std::copy(state.begin(), state.end(), out.yt.begin());
    out.y.row(0) = y_.row(static_cast<Eigen::Index>(j0));
    std::vector<double> add(Kd);
    Eigen::MatrixXd z;
    std::vector<Eigen::MatrixXd> jac;
    for (std::size_t i = 0; i + 1 < len; ++i) {
      std::size_t c = (j0 + i) / S_;
      const StepCoefficients& co = cell_[c];
      Eigen::RowVectorXd m = slopes.row(static_cast<Eigen::Index>(c));
      Eigen::RowVectorXd yo = old.y.row(static_cast<Eigen::Index>(i));
      sigma_.value(yo, z);
      Eigen::RowVectorXd p = m * z;
      if (young_) {
        for (std::size_t k = 0; k < K_; ++k)
          for (Eigen::Index l = 0; l < d_; ++l) add[k * d_ + l] = co.first[k] * p(l);
      } else {
        sigma_.jacobian(yo, jac);
        Eigen::RowVectorXd u = m * old.zeta[i];
        Eigen::MatrixXd v(d_, d_);
        for (Eigen::Index mm = 0; mm < d_; ++mm) v.row(mm) = m * jac[static_cast<std::size_t>(mm)];
        Eigen::RowVectorXd q = u * v;
        // f_vs = sum_l w_l a_vs(eta_l) y~_s(eta_l) enters through D sigma
        Eigen::MatrixXd f(static_cast<Eigen::Index>(K_), d_);
        for (std::size_t l = 0; l < K_; ++l)
          f.row(static_cast<Eigen::Index>(l)) =
              Eigen::Map<const Eigen::RowVectorXd>(&old.yt[i * Kd + l * d_], d_) * v;
        for (std::size_t k = 0; k < K_; ++k) {
          Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(d_);
          for (std::size_t l = 0; l < K_; ++l) r += co.drift[k * K_ + l] * f.row(static_cast<Eigen::Index>(l));
          for (Eigen::Index l = 0; l < d_; ++l) add[k * d_ + l] = co.first[k] * p(l) + co.area[k] * q(l) + r(l);
        }
      }
      kt.twisted_update(state.data(), decay_[c].data(), add.data(), Kd);
      std::copy(state.begin(), state.end(), out.yt.begin() + static_cast<std::ptrdiff_t>((i + 1) * Kd));
      out.y.row(static_cast<Eigen::Index>(i + 1)) = project(state.data());
      out.zeta[i] = z;
    }
    out.zeta[len - 1] = sigma_(old.y.row(static_cast<Eigen::Index>(len - 1)));
    return out;
  }

  // L_beta sup + zeta sup + theta-Hoelder of delta~ of the difference on driver points.
  double difference(std::size_t i0, std::size_t i1, const Iterate& a, const Iterate& b) const {
    const std::size_t len = a.zeta.size(), Kd = K_ * static_cast<std::size_t>(d_);
    std::vector<double> diff(len * Kd);
    for (std::size_t q = 0; q < diff.size(); ++q) diff[q] = a.yt[q] - b.yt[q];
    double sup = 0.0, zsup = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      sup = std::max(sup, lbeta_norm_at(&diff[i * Kd]));
      zsup = std::max(zsup, (a.zeta[i] - b.zeta[i]).norm());
    }
    const std::size_t j0 = i0 * S_;
    auto local = [&](std::size_t p) { return (p * S_ - j0) * Kd; };
    double hold = holder(i0, i1, [&](std::size_t t, std::size_t s, std::size_t k, Eigen::RowVectorXd& out) {
      double at = twist(model_.xi[k], mesh_[s * S_], mesh_[t * S_]);
      for (Eigen::Index l = 0; l < d_; ++l) {
        double ds = diff[local(s) + k * d_ + l];
        out(l) = diff[local(t) + k * d_ + l] - ds - at * ds;
      }
    });
    return sup + zsup + hold;
  }

  double lbeta_norm_at(const double* v) const {
    double total = 0.0;
    for (std::size_t k = 0; k < K_; ++k) {
      double sq = 0.0;
      for (Eigen::Index l = 0; l < d_; ++l) sq += v[k * d_ + l] * v[k * d_ + l];
      total += model_.lbeta[k] * std::sqrt(sq);
    }
    return total;
  }

  // max over driver pairs s < t in [i0, i1] of sum_k lbeta_k |v_k(t, s)| / (t - s)^theta
  template <class Fn>
  double holder(std::size_t i0, std::size_t i1, Fn&& value, double exponent = -1.0) const {
    if (exponent < 0.0) exponent = theta_;
    const TimeGrid& g = model_.driver->grid();
    const kernels::Table& kt = kernels::active();
    Eigen::RowVectorXd v(d_);
    std::vector<double> num, den;
    double best = 0.0;
    for (std::size_t s = i0; s < i1; ++s) {
      num.clear();
      den.clear();
      for (std::size_t t = s + 1; t <= i1; ++t) {
        double total = 0.0;
        for (std::size_t k = 0; k < K_; ++k) {
          value(t, s, k, v);
          total += model_.lbeta[k] * v.norm();
        }
        num.push_back(total);
        den.push_back(std::pow(g[t] - g[s], exponent));
      }
      best = std::max(best, kt.max_ratio(num.data(), den.data(), num.size()));
    }
    return best;
  }

  bool picard(std::size_t i0, std::size_t i1, IntervalDiagnostics& diag, Iterate& result) const {
    const std::size_t j0 = i0 * S_, j1 = i1 * S_;
    Iterate old = frozen(j0, j1);
    double previous = 0.0;
    for (int it = 1; it <= config_.max_iterations; ++it) {
      Iterate next = sweep(j0, j1, old);
      double d = difference(i0, i1, next, old);
      diag.iterations = it;
      diag.last_difference = d;
      if (it >= 2 && previous > 0.0) {
        diag.contraction = d / previous;
        if (it == 2 && diag.contraction >= 1.0 && d > config_.tolerance) return false;
      }
      result = std::move(next);
      if (d <= config_.tolerance) return true;
      previous = d;
      old = result;
    }
    return false;
  }

  void commit(std::size_t i0, std::size_t i1, const Iterate& it) {
    const std::size_t j0 = i0 * S_, j1 = i1 * S_, Kd = K_ * static_cast<std::size_t>(d_);
    std::copy(it.yt.begin(), it.yt.end(), yt_.begin() + static_cast<std::ptrdiff_t>(j0 * Kd));
    for (std::size_t j = j0; j <= j1; ++j) {
      y_.row(static_cast<Eigen::Index>(j)) = it.y.row(static_cast<Eigen::Index>(j - j0));
      zeta_[j] = it.zeta[j - j0];
    }
  }

  void norms(std::size_t i0, std::size_t i1, IntervalDiagnostics& diag, const Solution& sol) const {
    const std::size_t Kd = K_ * static_cast<std::size_t>(d_);
    auto at = [&](std::size_t p, std::size_t k, Eigen::Index l) { return yt_[p * S_ * Kd + k * d_ + l]; };
    auto dtilde = [&](std::size_t t, std::size_t s, std::size_t k, Eigen::RowVectorXd& out) {
      double a = twist(model_.xi[k], mesh_[s * S_], mesh_[t * S_]);
      for (Eigen::Index l = 0; l < d_; ++l) out(l) = at(t, k, l) - at(s, k, l) - a * at(s, k, l);
    };
    for (std::size_t p = i0; p <= i1; ++p) {
      diag.sup_ytilde = std::max(diag.sup_ytilde, lbeta_norm_at(&yt_[p * S_ * Kd]));
      diag.sup_zeta = std::max(diag.sup_zeta, zeta_[p * S_].norm());
    }
    diag.holder_ytilde = holder(i0, i1, dtilde);
    const TimeGrid& g = model_.driver->grid();
    for (std::size_t s = i0; s < i1; ++s)
      for (std::size_t t = s + 1; t <= i1; ++t)
        diag.holder_zeta = std::max(diag.holder_zeta,
                                    (zeta_[t * S_] - zeta_[s * S_]).norm() / std::pow(g[t] - g[s], theta_));
    if (!young_) {
      std::vector<std::vector<std::vector<Eigen::RowVectorXd>>> rows(K_);
      for (std::size_t k = 0; k < K_; ++k)
        for (std::size_t s = i0; s < i1; ++s) rows[k].push_back(model_.x1_row(s, i1, k));
      diag.holder_remainder = holder(
          i0, i1,
          [&](std::size_t t, std::size_t s, std::size_t k, Eigen::RowVectorXd& out) {
            dtilde(t, s, k, out);
            out -= rows[k][s - i0][t - s] * zeta_[s * S_];
          },
          2.0 * theta_);
    }
    diag.q_norm = diag.sup_ytilde + diag.holder_ytilde + diag.sup_zeta + diag.holder_zeta + diag.holder_remainder;
    for (std::size_t k = 0; k < K_; ++k) {
      double sq = 0.0;
      for (Eigen::Index l = 0; l < d_; ++l) sq += at(i0, k, l) * at(i0, k, l);
      diag.start_l1 += model_.l1[k] * std::sqrt(sq);
    }
    double base = static_cast<double>(diag.n_param + diag.index);
    diag.ball_ok = diag.q_norm <= std::pow(base, sol.alpha2);
    diag.start_ok = diag.start_l1 <= std::pow(base, sol.alpha1);
  }

  const Model& model_;
  const SigmaField& sigma_;
  Eigen::RowVectorXd a_;
  SolverConfig config_;
  bool young_;
  double theta_ = 0.0;
  std::size_t K_ = 0, S_ = 1, cells_ = 0, M_ = 0;
  Eigen::Index d_ = 0, n_ = 0;
  std::vector<double> mesh_;
  std::vector<StepCoefficients> cell_;
  std::vector<std::vector<double>> decay_;
  std::vector<double> yt_;
  Eigen::MatrixXd y_;
  std::vector<Eigen::MatrixXd> zeta_;
};

Model lift_model(const RoughLift& lift, double beta) {
  Model m;
  m.driver = &lift.driver();
  m.measure = lift.measure_ptr();
  const KernelMeasure& mu = lift.measure();
  for (std::size_t k = 0; k < mu.size(); ++k) {
    m.xi.push_back(mu.xi(k));
    m.weight.push_back(mu.weight(k));
  }
  m.lbeta = mu.lbeta_weights(beta);
  m.l1 = mu.lbeta_weights(1.0);
  const RoughLift* self = &lift;
  m.coefficients = [self](double h) {
    const RoughLift::Coefficients& c = self->coefficients(h);
    const std::size_t K = c.decay.size();
    std::vector<double> drift(K * K);
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t l = 0; l < K; ++l)
        drift[k * K + l] = self->measure().weight(l) * (c.second[k * K + l] - c.first[k]);
    return StepCoefficients{c.decay, c.first, c.weighted_third, drift};
  };
  m.x1_row = [self](std::size_t s, std::size_t e, std::size_t k) { return self->x1_tilde_row(s, e, k); };
  return m;
}

}  // namespace

std::vector<Eigen::RowVectorXd> Solution::ytilde_at(std::size_t i) const {
  std::vector<Eigen::RowVectorXd> out;
  for (std::size_t k = 0; k < measure->size(); ++k) out.push_back(path->ytilde(k, i));
  return out;
}

Solution solve_young(const RoughLift& lift, const SigmaField& sigma, const Eigen::RowVectorXd& a,
                     const SolverConfig& config, const SolveRange& range) {
  if (!lift.flags().first_order) throw InvalidInput("young solver needs a first-order lift");
  if (!(lift.gamma() > 0.5)) throw InvalidInput("young solver needs a lift with gamma > 1/2");
  Model model = lift_model(lift, config.beta);
  Engine engine(model, sigma, a, config, true);
  return engine.run(range, "young");
}

Solution solve_rough(const RoughLift& lift, const SigmaField& sigma, const Eigen::RowVectorXd& a,
                     const SolverConfig& config, const SolveRange& range) {
  if (!lift.flags().second_order) throw InvalidInput("rough solver needs a second-order lift");
  if (!(lift.gamma() > 1.0 / 3.0)) throw InvalidInput("rough solver needs a lift with gamma > 1/3");
  Model model = lift_model(lift, config.beta);
  Engine engine(model, sigma, a, config, false);
  return engine.run(range, "rough");
}

Solution solve_rough_ode(const DriverPath& driver, const SigmaField& sigma, const Eigen::RowVectorXd& a,
                         const SolverConfig& config, const SolveRange& range) {
  Model model;
  model.driver = &driver;
  model.xi = {0.0};
  model.weight = {1.0};
  model.lbeta = {std::abs(1.0) * (1.0 + std::pow(0.0, config.beta))};
  model.l1 = {1.0};
  model.measure = std::make_shared<KernelMeasure>(std::vector<Atom>{{0.0, 1.0}});
  model.coefficients = [](double h) { return StepCoefficients{{1.0}, {h}, {0.5 * h * h}, {1.0 * (h - h)}}; };
  const DriverPath* x = &driver;
  model.x1_row = [x](std::size_t s, std::size_t e, std::size_t) {
    std::vector<Eigen::RowVectorXd> row;
    for (std::size_t j = s; j <= e; ++j)
      row.push_back(x->values().row(static_cast<Eigen::Index>(j)) - x->values().row(static_cast<Eigen::Index>(s)));
    return row;
  };
  Engine engine(model, sigma, a, config, false);
  return engine.run(range, "rough-ode");
}

double picard_residual(const Solution& solution, const RoughLift& lift, const SigmaField& sigma, bool young) {
  const std::size_t S = std::size_t{1} << solution.sub_level;
  const TimeGrid& g = lift.grid();
  const KernelMeasure& mu = lift.measure();
  double worst = 0.0;
  std::vector<Eigen::MatrixXd> jac;
  for (std::size_t j = solution.first * S; j < solution.last * S; ++j) {
    std::size_t c = j / S;
    double h = (g[c + 1] - g[c]) / static_cast<double>(S);
    const RoughLift::Coefficients& co = lift.coefficients(h);
    Eigen::RowVectorXd m = lift.driver().slope(c);
    Eigen::RowVectorXd y = solution.mesh_y.row(static_cast<Eigen::Index>(j));
    Eigen::MatrixXd z = sigma(y);
    Eigen::RowVectorXd p = m * z;
    const Eigen::Index d = y.size();
    const std::size_t K = mu.size();
    Eigen::RowVectorXd q = Eigen::RowVectorXd::Zero(d);
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K), d);
    if (!young) {
      sigma.jacobian(y, jac);
      Eigen::MatrixXd v(d, d);
      for (Eigen::Index mm = 0; mm < d; ++mm) v.row(mm) = m * jac[static_cast<std::size_t>(mm)];
      q = (m * z) * v;
      for (std::size_t l = 0; l < K; ++l)
        f.row(static_cast<Eigen::Index>(l)) = solution.mesh_ytilde[l].row(static_cast<Eigen::Index>(j)) * v;
    }
    for (std::size_t k = 0; k < K; ++k) {
      Eigen::RowVectorXd germ = co.first[k] * p + co.weighted_third[k] * q;
      for (std::size_t l = 0; l < K; ++l)
        germ += mu.weight(l) * (co.second[k * K + l] - co.first[k]) * f.row(static_cast<Eigen::Index>(l));
      Eigen::RowVectorXd r = solution.mesh_ytilde[k].row(static_cast<Eigen::Index>(j + 1)) -
                             co.decay[k] * solution.mesh_ytilde[k].row(static_cast<Eigen::Index>(j)) - germ;
      worst = std::max(worst, r.norm());
    }
  }
  return worst;
}

}  // namespace convrough
