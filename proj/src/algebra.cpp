#include <algorithm>
#include <cmath>

#include "convrough/errors.hpp"
#include "convrough/increments.hpp"
#include "convrough/kernels.hpp"

namespace convrough {

namespace {

Value zeros(Shape s) { return Value::Zero(s.rows, s.cols); }

std::size_t grid_index(const TimeGrid& grid, double t) {
  std::size_t i = grid.index_of(t);
  if (i == TimeGrid::npos) throw InvalidInput("time is not a grid point of this increment");
  return i;
}

void check_order(double t, double s) {
  if (t < s) throw InvalidInput("increment arguments must be ordered t >= s");
}

void check_order(double t, double u, double s) {
  if (t < u || u < s) throw InvalidInput("increment arguments must be ordered t >= u >= s");
}

void check_grid(const TimeGrid& a, const TimeGrid& b) {
  if (!(a == b)) throw InvalidInput("increments live on different grids");
}

std::uint64_t pack(std::size_t a, std::size_t b, std::size_t c = 0) {
  return (static_cast<std::uint64_t>(a) << 42) ^ (static_cast<std::uint64_t>(b) << 21) ^ static_cast<std::uint64_t>(c);
}

void check_atom(const KernelMeasure& m, std::size_t k) {
  if (k >= m.size()) throw InvalidInput("atom index out of range");
}

Shape product_shape(Shape a, Shape b) {
  if (a.cols != b.rows) throw InvalidInput("product shape mismatch");
  return {a.rows, b.cols};
}

}  // namespace

Increment1::Increment1(GridPtr grid, std::vector<Value> values) : grid_(std::move(grid)), values_(std::move(values)) {
  if (!grid_) throw InvalidInput("increment needs a grid");
  if (values_.size() != grid_->size()) throw InvalidInput("Increment1 needs one value per grid point");
  shape_ = shape_of(values_.front());
  for (const Value& v : values_) {
    if (!(shape_of(v) == shape_)) throw InvalidInput("Increment1 values have inconsistent shapes");
  }
}

Increment1 Increment1::from_function(GridPtr grid, const std::function<Value(double)>& f) {
  std::vector<Value> values;
  values.reserve(grid->size());
  for (double t : grid->points()) values.push_back(f(t));
  return Increment1(std::move(grid), std::move(values));
}

const Value& Increment1::at(double t) const { return values_[grid_index(*grid_, t)]; }

Increment2::Increment2(GridPtr grid, Shape shape, Fn fn)
    : grid_(std::move(grid)), shape_(shape), fn_(std::move(fn)), memo_(std::make_shared<detail::Memo>()) {
  if (!grid_) throw InvalidInput("increment needs a grid");
}

Increment2 Increment2::from_table(GridPtr grid, std::vector<std::vector<Value>> table) {
  if (table.size() != grid->size()) throw InvalidInput("table must be indexed by grid points");
  Shape shape = shape_of(table[0][0]);
  auto data = std::make_shared<std::vector<std::vector<Value>>>(std::move(table));
  const TimeGrid* g = grid.get();
  return Increment2(grid, shape, [data, g](double t, double s) {
    return (*data)[grid_index(*g, t)][grid_index(*g, s)];
  });
}

Value Increment2::operator()(std::size_t t, std::size_t s) const {
  if (t < s) throw InvalidInput("increment arguments must be ordered t >= s");
  if (t == s) return zeros(shape_);
  std::uint64_t key = pack(t, s);
  Value v;
  if (memo_->find(key, v)) return v;
  v = fn_((*grid_)[t], (*grid_)[s]);
  memo_->insert(key, v);
  return v;
}

Value Increment2::at(double t, double s) const {
  check_order(t, s);
  if (t == s) return zeros(shape_);
  return fn_(t, s);
}

Increment3::Increment3(GridPtr grid, Shape shape, Fn fn) : grid_(std::move(grid)), shape_(shape), fn_(std::move(fn)) {
  if (!grid_) throw InvalidInput("increment needs a grid");
}

Value Increment3::operator()(std::size_t t, std::size_t u, std::size_t s) const {
  return at((*grid_)[t], (*grid_)[u], (*grid_)[s]);
}

Value Increment3::at(double t, double u, double s) const {
  check_order(t, u, s);
  if (t == u || u == s) return zeros(shape_);
  return fn_(t, u, s);
}

LaplaceIncrement1::LaplaceIncrement1(GridPtr grid, MeasurePtr measure, std::vector<std::vector<Value>> values)
    : grid_(std::move(grid)), measure_(std::move(measure)), values_(std::move(values)) {
  if (!grid_ || !measure_) throw InvalidInput("Laplace increment needs a grid and a measure");
  if (values_.size() != measure_->size()) throw InvalidInput("Laplace increment needs one row per atom");
  if (values_.empty()) throw InvalidInput("Laplace increment over an empty measure");
  shape_ = shape_of(values_[0].at(0));
  for (const auto& row : values_) {
    if (row.size() != grid_->size()) throw InvalidInput("Laplace increment needs one value per grid point");
    for (const Value& v : row)
      if (!(shape_of(v) == shape_)) throw InvalidInput("Laplace increment values have inconsistent shapes");
  }
}

LaplaceIncrement1 LaplaceIncrement1::from_function(GridPtr grid, MeasurePtr measure,
                                                   const std::function<Value(std::size_t, double)>& f) {
  std::vector<std::vector<Value>> values(measure->size());
  for (std::size_t k = 0; k < measure->size(); ++k)
    for (double t : grid->points()) values[k].push_back(f(k, t));
  return LaplaceIncrement1(std::move(grid), std::move(measure), std::move(values));
}

const Value& LaplaceIncrement1::at(std::size_t k, double t) const {
  check_atom(*measure_, k);
  return values_[k][grid_index(*grid_, t)];
}

LaplaceIncrement2::LaplaceIncrement2(GridPtr grid, MeasurePtr measure, Shape shape, Fn fn)
    : grid_(std::move(grid)),
      measure_(std::move(measure)),
      shape_(shape),
      fn_(std::move(fn)),
      memo_(std::make_shared<detail::Memo>()) {
  if (!grid_ || !measure_) throw InvalidInput("Laplace increment needs a grid and a measure");
}

Value LaplaceIncrement2::operator()(std::size_t k, std::size_t t, std::size_t s) const {
  check_atom(*measure_, k);
  if (t < s) throw InvalidInput("increment arguments must be ordered t >= s");
  if (t == s) return zeros(shape_);
  std::uint64_t key = pack(t, s, k);
  Value v;
  if (memo_->find(key, v)) return v;
  v = fn_(k, (*grid_)[t], (*grid_)[s]);
  memo_->insert(key, v);
  return v;
}

Value LaplaceIncrement2::at(std::size_t k, double t, double s) const {
  check_atom(*measure_, k);
  check_order(t, s);
  if (t == s) return zeros(shape_);
  return fn_(k, t, s);
}

LaplaceIncrement3::LaplaceIncrement3(GridPtr grid, MeasurePtr measure, Shape shape, Fn fn)
    : grid_(std::move(grid)), measure_(std::move(measure)), shape_(shape), fn_(std::move(fn)) {
  if (!grid_ || !measure_) throw InvalidInput("Laplace increment needs a grid and a measure");
}

Value LaplaceIncrement3::operator()(std::size_t k, std::size_t t, std::size_t u, std::size_t s) const {
  return at(k, (*grid_)[t], (*grid_)[u], (*grid_)[s]);
}

Value LaplaceIncrement3::at(std::size_t k, double t, double u, double s) const {
  check_atom(*measure_, k);
  check_order(t, u, s);
  if (t == u || u == s) return zeros(shape_);
  return fn_(k, t, u, s);
}

DoubleLaplaceIncrement2::DoubleLaplaceIncrement2(GridPtr grid, MeasurePtr xi_measure, MeasurePtr eta_measure,
                                                 Shape shape, Fn fn)
    : grid_(std::move(grid)), xi_(std::move(xi_measure)), eta_(std::move(eta_measure)), shape_(shape), fn_(std::move(fn)) {
  if (!grid_ || !xi_ || !eta_) throw InvalidInput("double Laplace increment needs a grid and two measures");
}

Value DoubleLaplaceIncrement2::at(std::size_t k, std::size_t l, double t, double s) const {
  check_atom(*xi_, k);
  check_atom(*eta_, l);
  check_order(t, s);
  if (t == s) return zeros(shape_);
  return fn_(k, l, t, s);
}

Value DoubleLaplaceIncrement2::operator()(std::size_t k, std::size_t l, std::size_t t, std::size_t s) const {
  return at(k, l, (*grid_)[t], (*grid_)[s]);
}

DoubleLaplaceIncrement3::DoubleLaplaceIncrement3(GridPtr grid, MeasurePtr xi_measure, MeasurePtr eta_measure,
                                                 Shape shape, Fn fn)
    : grid_(std::move(grid)), xi_(std::move(xi_measure)), eta_(std::move(eta_measure)), shape_(shape), fn_(std::move(fn)) {}

Value DoubleLaplaceIncrement3::at(std::size_t k, std::size_t l, double t, double u, double s) const {
  check_atom(*xi_, k);
  check_atom(*eta_, l);
  check_order(t, u, s);
  if (t == u || u == s) return zeros(shape_);
  return fn_(k, l, t, u, s);
}

Value DoubleLaplaceIncrement3::operator()(std::size_t k, std::size_t l, std::size_t t, std::size_t u,
                                          std::size_t s) const {
  return at(k, l, (*grid_)[t], (*grid_)[u], (*grid_)[s]);
}

double twist(double xi, double s, double t) {
  if (!(xi >= 0.0)) throw InvalidInput("twist needs xi >= 0");
  if (t < s) throw InvalidInput("twist needs s <= t");
  return std::expm1(-xi * (t - s));
}

Increment2 delta1(const Increment1& g) {
  auto gp = std::make_shared<Increment1>(g);
  return Increment2(g.grid_ptr(), g.shape(), [gp](double t, double s) -> Value { return gp->at(t) - gp->at(s); });
}

Increment3 delta2(const Increment2& h) {
  auto hp = std::make_shared<Increment2>(h);
  return Increment3(h.grid_ptr(), h.shape(), [hp](double t, double u, double s) -> Value {
    return hp->at(t, s) - hp->at(t, u) - hp->at(u, s);
  });
}

LaplaceIncrement2 delta_tilde(const LaplaceIncrement1& g) {
  auto gp = std::make_shared<LaplaceIncrement1>(g);
  return LaplaceIncrement2(g.grid_ptr(), g.measure_ptr(), g.shape(), [gp](std::size_t k, double t, double s) -> Value {
    double a = twist(gp->measure().xi(k), s, t);
    return gp->at(k, t) - gp->at(k, s) - a * gp->at(k, s);
  });
}

LaplaceIncrement3 delta_tilde(const LaplaceIncrement2& h) {
  auto hp = std::make_shared<LaplaceIncrement2>(h);
  return LaplaceIncrement3(h.grid_ptr(), h.measure_ptr(), h.shape(),
                           [hp](std::size_t k, double t, double u, double s) -> Value {
                             double a = twist(hp->measure().xi(k), u, t);
                             Value hus = hp->at(k, u, s);
                             return hp->at(k, t, s) - hp->at(k, t, u) - hus - a * hus;
                           });
}

DoubleLaplaceIncrement3 delta_double_tilde(const DoubleLaplaceIncrement2& r) {
  auto rp = std::make_shared<DoubleLaplaceIncrement2>(r);
  return DoubleLaplaceIncrement3(r.grid_ptr(), r.xi_measure_ptr(), r.eta_measure_ptr(), r.shape(),
                                 [rp](std::size_t k, std::size_t l, double t, double u, double s) -> Value {
                                   double a_xi = twist(rp->xi_measure().xi(k), u, t);
                                   double a_eta = twist(rp->eta_measure().xi(l), s, u);
                                   Value rus = rp->at(k, l, u, s);
                                   Value rtu = rp->at(k, l, t, u);
                                   return rp->at(k, l, t, s) - rtu - rus - a_xi * rus - rtu * a_eta;
                                 });
}

Increment1 product(const Increment1& g, const Increment1& h) {
  check_grid(g.grid(), h.grid());
  product_shape(g.shape(), h.shape());
  std::vector<Value> values;
  for (std::size_t i = 0; i < g.grid().size(); ++i) values.push_back(g(i) * h(i));
  return Increment1(g.grid_ptr(), std::move(values));
}

Increment2 product(const Increment1& g, const Increment2& h) {
  check_grid(g.grid(), h.grid());
  auto gp = std::make_shared<Increment1>(g);
  auto hp = std::make_shared<Increment2>(h);
  return Increment2(g.grid_ptr(), product_shape(g.shape(), h.shape()),
                    [gp, hp](double t, double s) -> Value { return gp->at(t) * hp->at(t, s); });
}

Increment2 product(const Increment2& h, const Increment1& g) {
  check_grid(g.grid(), h.grid());
  auto gp = std::make_shared<Increment1>(g);
  auto hp = std::make_shared<Increment2>(h);
  return Increment2(g.grid_ptr(), product_shape(h.shape(), g.shape()),
                    [gp, hp](double t, double s) -> Value { return hp->at(t, s) * gp->at(s); });
}

Increment3 product(const Increment2& g, const Increment2& h) {
  check_grid(g.grid(), h.grid());
  auto gp = std::make_shared<Increment2>(g);
  auto hp = std::make_shared<Increment2>(h);
  return Increment3(g.grid_ptr(), product_shape(g.shape(), h.shape()),
                    [gp, hp](double t, double u, double s) -> Value { return gp->at(t, u) * hp->at(u, s); });
}

LaplaceIncrement2 product(const LaplaceIncrement2& m, const Increment1& l) {
  check_grid(m.grid(), l.grid());
  auto mp = std::make_shared<LaplaceIncrement2>(m);
  auto lp = std::make_shared<Increment1>(l);
  return LaplaceIncrement2(m.grid_ptr(), m.measure_ptr(), product_shape(m.shape(), l.shape()),
                           [mp, lp](std::size_t k, double t, double s) -> Value { return mp->at(k, t, s) * lp->at(s); });
}

LaplaceIncrement3 product(const LaplaceIncrement2& m, const Increment2& l) {
  check_grid(m.grid(), l.grid());
  auto mp = std::make_shared<LaplaceIncrement2>(m);
  auto lp = std::make_shared<Increment2>(l);
  return LaplaceIncrement3(m.grid_ptr(), m.measure_ptr(), product_shape(m.shape(), l.shape()),
                           [mp, lp](std::size_t k, double t, double u, double s) -> Value {
                             return mp->at(k, t, u) * lp->at(u, s);
                           });
}

LaplaceIncrement3 product(const LaplaceIncrement3& m, const Increment1& l) {
  check_grid(m.grid(), l.grid());
  auto mp = std::make_shared<LaplaceIncrement3>(m);
  auto lp = std::make_shared<Increment1>(l);
  return LaplaceIncrement3(m.grid_ptr(), m.measure_ptr(), product_shape(m.shape(), l.shape()),
                           [mp, lp](std::size_t k, double t, double u, double s) -> Value {
                             return mp->at(k, t, u, s) * lp->at(s);
                           });
}

double trace_pair(const Value& a, const Value& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidInput("trace pairing needs equal shapes");
  return a.cwiseProduct(b).sum();
}

double lbeta_norm(const std::vector<Value>& per_atom, const KernelMeasure& measure, double beta) {
  if (beta < 0.0) throw InvalidInput("beta must be >= 0");
  if (per_atom.size() != measure.size()) throw InvalidInput("per-atom values do not match the measure");
  std::vector<double> w = measure.lbeta_weights(beta);
  std::vector<double> norms(per_atom.size());
  for (std::size_t k = 0; k < per_atom.size(); ++k) norms[k] = per_atom[k].norm();
  return kernels::active().weighted_abs_sum(w.data(), norms.data(), norms.size());
}

HolderNorm2 holder_norm2(const Increment2& f, double mu) {
  if (!(mu > 0.0)) throw InvalidInput("Hoelder exponent must be positive");
  const TimeGrid& g = f.grid();
  if (g.size() < 2) throw InvalidInput("empty grid");
  const auto& k = kernels::active();
  HolderNorm2 best;
  std::vector<double> num, den;
  for (std::size_t s = 0; s + 1 < g.size(); ++s) {
    num.clear();
    den.clear();
    for (std::size_t t = s + 1; t < g.size(); ++t) {
      num.push_back(f.at(g[t], g[s]).norm());
      den.push_back(std::pow(g[t] - g[s], mu));
    }
    double m = k.max_ratio(num.data(), den.data(), num.size());
    if (m > best.value) best = {m, s + 1 + kernels::first_ratio_index(num.data(), den.data(), num.size(), m), s};
  }
  return best;
}

HolderNorm2 holder_norm2(const LaplaceIncrement2& f, double mu, double beta) {
  if (!(mu > 0.0)) throw InvalidInput("Hoelder exponent must be positive");
  const TimeGrid& g = f.grid();
  const auto& k = kernels::active();
  HolderNorm2 best;
  std::vector<double> num, den;
  std::vector<Value> per_atom(f.measure().size());
  for (std::size_t s = 0; s + 1 < g.size(); ++s) {
    num.clear();
    den.clear();
    for (std::size_t t = s + 1; t < g.size(); ++t) {
      for (std::size_t a = 0; a < per_atom.size(); ++a) per_atom[a] = f.at(a, g[t], g[s]);
      num.push_back(lbeta_norm(per_atom, f.measure(), beta));
      den.push_back(std::pow(g[t] - g[s], mu));
    }
    double m = k.max_ratio(num.data(), den.data(), num.size());
    if (m > best.value) best = {m, s + 1 + kernels::first_ratio_index(num.data(), den.data(), num.size(), m), s};
  }
  return best;
}

namespace {

template <class Eval>
HolderNorm3 holder3_impl(const TimeGrid& g, double gamma, double rho, Eval eval) {
  if (!(gamma > 0.0) || !(rho > 0.0)) throw InvalidInput("Hoelder exponents must be positive");
  const auto& k = kernels::active();
  HolderNorm3 best;
  std::vector<double> num, den;
  for (std::size_t s = 0; s < g.size(); ++s) {
    for (std::size_t u = s + 1; u < g.size(); ++u) {
      num.clear();
      den.clear();
      double left = std::pow(g[u] - g[s], gamma);
      for (std::size_t t = u + 1; t < g.size(); ++t) {
        num.push_back(eval(t, u, s));
        den.push_back(left * std::pow(g[t] - g[u], rho));
      }
      if (num.empty()) continue;
      double m = k.max_ratio(num.data(), den.data(), num.size());
      if (m > best.value) best = {m, u + 1 + kernels::first_ratio_index(num.data(), den.data(), num.size(), m), u, s};
    }
  }
  return best;
}

}  // namespace

HolderNorm3 holder_norm3(const Increment3& h, double gamma, double rho) {
  const TimeGrid& g = h.grid();
  return holder3_impl(g, gamma, rho, [&](std::size_t t, std::size_t u, std::size_t s) { return h(t, u, s).norm(); });
}

HolderNorm3 holder_norm3(const LaplaceIncrement3& h, double gamma, double rho, double beta) {
  const TimeGrid& g = h.grid();
  std::vector<Value> per_atom(h.measure().size());
  return holder3_impl(g, gamma, rho, [&](std::size_t t, std::size_t u, std::size_t s) {
    for (std::size_t a = 0; a < per_atom.size(); ++a) per_atom[a] = h(a, t, u, s);
    return lbeta_norm(per_atom, h.measure(), beta);
  });
}

HolderEstimate estimate_holder_exponent(const Increment1& path) {
  const TimeGrid& g = path.grid();
  if (g.size() < 32) throw InvalidInput("Hoelder estimation needs at least 32 grid points");
  std::vector<double> lx, ly;
  std::vector<double> mags;
  for (std::size_t lag = 1; 4 * lag <= g.cells(); lag *= 2) {
    mags.clear();
    double span = 0.0;
    for (std::size_t i = 0; i + lag < g.size(); ++i) {
      mags.push_back((path(i + lag) - path(i)).norm());
      span += g[i + lag] - g[i];
    }
    span /= static_cast<double>(mags.size());
    auto mid = mags.begin() + static_cast<std::ptrdiff_t>(mags.size() / 2);
    std::nth_element(mags.begin(), mid, mags.end());
    double median = *mid;
    if (mags.size() % 2 == 0) {
      double lower = *std::max_element(mags.begin(), mid);
      median = 0.5 * (median + lower);
    }
    if (median > 0.0) {
      lx.push_back(std::log(span));
      ly.push_back(std::log(median));
    }
  }
  if (lx.size() < 2) throw InvalidInput("path is constant; Hoelder exponent undefined");
  double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  double slope = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    double r = ly[i] - (my + slope * (lx[i] - mx));
    rss += r * r;
  }
  return {slope, std::sqrt(rss / n)};
}

}  // namespace convrough
