#include "convrough/sewing.hpp"

#include <cmath>

#include "convrough/errors.hpp"

namespace convrough {

std::vector<double> DyadicScheme::partition(int level) const {
  if (level < 0 || level > max_level) throw InvalidInput("dyadic level out of range");
  std::size_t cells = std::size_t{1} << level;
  std::vector<double> pts(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i) pts[i] = s + (t - s) * static_cast<double>(i) / static_cast<double>(cells);
  pts.back() = t;
  return pts;
}

namespace {

void check_interval(double s, double t) {
  if (!(t >= s)) throw InvalidInput("sewing interval must satisfy s <= t");
}

}  // namespace

Value lambda_dyadic(const Germ& b, double s, double t, int level, int max_level) {
  return lambda_tilde_dyadic(b, 0.0, s, t, level, max_level);
}

Value lambda_dyadic(const Increment2& b, double s, double t, int level, int max_level) {
  return lambda_dyadic([&b](double tt, double ss) { return b.at(tt, ss); }, s, t, level, max_level);
}

Value lambda_tilde_dyadic(const Germ& b, double xi, double s, double t, int level, int max_level) {
  check_interval(s, t);
  if (level > max_level) throw InvalidInput("sewing level exceeds the configured maximum");
  if (level < 0) throw InvalidInput("sewing level must be >= 0");
  Value bts = b(t, s);
  std::vector<double> pts = DyadicScheme{s, t, max_level}.partition(level);
  std::size_t last = pts.size() - 2;  // index of the last interior point
  if (level == 0 || t == s) return Value::Zero(bts.rows(), bts.cols());
  auto w = [xi, t](double v) { return std::exp(-xi * (t - v)); };
  if (last == 1) return bts - w(pts[1]) * b(pts[1], s) - b(t, pts[1]);
  Value m = bts - b(t, pts[last]) - w(pts[1]) * b(pts[1], s);
  for (std::size_t i = 1; i < last; ++i) m -= w(pts[i + 1]) * b(pts[i + 1], pts[i]);
  return m;
}

Value lambda_tilde_dyadic(const LaplaceIncrement2& b, std::size_t k, double s, double t, int level, int max_level) {
  double xi = b.measure().xi(k);
  return lambda_tilde_dyadic([&b, k](double tt, double ss) { return b.at(k, tt, ss); }, xi, s, t, level, max_level);
}

SewingResult compensated_sum_tilde(const Germ& g, double xi, double s, double t, int level,
                                   const SewingOptions& options) {
  check_interval(s, t);
  if (level < 0 || level > options.max_level) throw InvalidInput("sewing level out of range");
  SewingResult out;
  SewingDiagnostics& d = out.diagnostics;
  int rising = 0;
  for (int l = 0; l <= level; ++l) {
    std::vector<double> pts = DyadicScheme{s, t, options.max_level}.partition(l);
    Value sum;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      Value term = g(pts[i + 1], pts[i]);
      if (xi != 0.0) term *= std::exp(-xi * (t - pts[i + 1]));
      if (i == 0)
        sum = term;
      else
        sum += term;
    }
    d.partial_sums.push_back(sum);
    double diff = l == 0 ? 0.0 : (sum - d.partial_sums[static_cast<std::size_t>(l) - 1]).norm();
    d.differences.push_back(diff);
    d.levels_used = l;
    if (l >= 2) {
      double prev = d.differences[static_cast<std::size_t>(l) - 1];
      if (diff > options.abs_tol && diff >= prev)
        ++rising;
      else
        rising = 0;
      if (rising >= 3) throw NotSewable("compensated sums do not settle: level differences stopped decreasing");
    }
    if (options.early_stop && l >= 3 && (diff < options.abs_tol || diff < options.rel_tol * sum.norm())) {
      d.early_stopped = true;
      break;
    }
  }
  const auto& S = d.partial_sums;
  std::size_t L = S.size() - 1;
  out.value = S[L];
  d.richardson = S[L];
  d.romberg = S[L];
  if (L >= 2) {
    double d1 = d.differences[L - 1], d2 = d.differences[L];
    d.decay_ratio = d1 > 0.0 ? d2 / d1 : 0.0;
    double q = d.decay_ratio;
    if (q > 0.0 && q < 1.0) d.richardson = S[L] + (S[L] - S[L - 1]) * (q / (1.0 - q));
    Value ra = 2.0 * S[L - 1] - S[L - 2];
    Value rb = 2.0 * S[L] - S[L - 1];
    d.romberg = (4.0 * rb - ra) / 3.0;
  }
  return out;
}

SewingResult compensated_sum(const Germ& g, double s, double t, int level, const SewingOptions& options) {
  return compensated_sum_tilde(g, 0.0, s, t, level, options);
}

SewingResult compensated_sum_tilde(const LaplaceIncrement2& g, std::size_t k, double s, double t, int level,
                                   const SewingOptions& options) {
  double xi = g.measure().xi(k);
  return compensated_sum_tilde([&g, k](double tt, double ss) { return g.at(k, tt, ss); }, xi, s, t, level, options);
}

double sewing_constant(double mu) {
  if (!(mu > 1.0)) throw InvalidInput("sewing constant needs mu > 1");
  const int K = 1000;
  double partial = 0.0;
  for (int k = K; k >= 1; --k) partial += std::pow(static_cast<double>(k), -mu);
  double kk = K;
  double tail = std::pow(kk, 1.0 - mu) / (mu - 1.0) - 0.5 * std::pow(kk, -mu) + mu * std::pow(kk, -mu - 1.0) / 12.0 -
                mu * (mu + 1.0) * (mu + 2.0) * std::pow(kk, -mu - 3.0) / 720.0;
  return 2.0 + std::pow(2.0, mu) * (partial + tail);
}

namespace {

void check_exponents(double mu, double rho) {
  if (!(mu > 1.0)) throw InvalidInput("sewing bound needs mu > 1");
  if (!(rho > 0.0) || !(rho < mu)) throw InvalidInput("sewing bound needs 0 < rho < mu");
}

}  // namespace

SewingBoundReport sewing_bound_check(const Increment3& h, const Increment2& b, double mu, double rho, int level) {
  check_exponents(mu, rho);
  const TimeGrid& g = b.grid();
  SewingBoundReport r;
  r.c_mu = sewing_constant(mu);
  r.h_norm = holder_norm3(h, rho, mu - rho).value;
  for (std::size_t s = 0; s < g.size(); ++s) {
    for (std::size_t t = s + 1; t < g.size(); ++t) {
      double v = lambda_dyadic(b, g[s], g[t], level).norm() / std::pow(g[t] - g[s], mu);
      if (v > r.lambda_norm) {
        r.lambda_norm = v;
        r.worst_t = t;
        r.worst_s = s;
      }
    }
  }
  r.bound = r.c_mu * r.h_norm;
  r.holds = r.lambda_norm <= r.bound;
  return r;
}

SewingBoundReport sewing_bound_check(const LaplaceIncrement3& h, const LaplaceIncrement2& b, double mu, double rho,
                                     double beta, int level) {
  check_exponents(mu, rho);
  const TimeGrid& g = b.grid();
  const KernelMeasure& m = b.measure();
  SewingBoundReport r;
  r.c_mu = sewing_constant(mu);
  r.h_norm = holder_norm3(h, rho, mu - rho, beta).value;
  std::vector<Value> per_atom(m.size());
  for (std::size_t s = 0; s < g.size(); ++s) {
    for (std::size_t t = s + 1; t < g.size(); ++t) {
      for (std::size_t k = 0; k < m.size(); ++k) per_atom[k] = lambda_tilde_dyadic(b, k, g[s], g[t], level);
      double v = lbeta_norm(per_atom, m, beta) / std::pow(g[t] - g[s], mu);
      if (v > r.lambda_norm) {
        r.lambda_norm = v;
        r.worst_t = t;
        r.worst_s = s;
      }
    }
  }
  r.bound = r.c_mu * r.h_norm;
  r.holds = r.lambda_norm <= r.bound;
  return r;
}

}  // namespace convrough
