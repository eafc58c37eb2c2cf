#include "convrough/laplace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "convrough/errors.hpp"

namespace convrough {

KernelMeasure::KernelMeasure(std::vector<Atom> atoms, Provenance provenance)
    : atoms_(std::move(atoms)), provenance_(provenance) {
  for (const Atom& a : atoms_) {
    if (!std::isfinite(a.xi) || a.xi < 0.0) throw InvalidInput("atom frequency must be finite and >= 0");
    if (!std::isfinite(a.weight)) throw InvalidInput("atom weight must be finite");
  }
  std::sort(atoms_.begin(), atoms_.end(), [](const Atom& a, const Atom& b) { return a.xi < b.xi; });
  for (std::size_t k = 1; k < atoms_.size(); ++k) {
    if (atoms_[k].xi == atoms_[k - 1].xi) throw InvalidInput("duplicate atom frequency");
  }
}

KernelMeasure::KernelMeasure(const KernelMeasure& other)
    : atoms_(other.atoms_), provenance_(other.provenance_), declared_beta_(other.declared_beta_) {}

KernelMeasure& KernelMeasure::operator=(const KernelMeasure& other) {
  if (this != &other) {
    atoms_ = other.atoms_;
    provenance_ = other.provenance_;
    declared_beta_ = other.declared_beta_;
    std::lock_guard<std::mutex> lock(mutex_);
    moments_.clear();
  }
  return *this;
}

double KernelMeasure::moment(double beta) const {
  if (beta < 0.0) throw InvalidInput("beta must be >= 0");
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = moments_.find(beta);
    if (it != moments_.end()) return it->second;
  }
  double m = 0.0;
  for (const Atom& a : atoms_) m += std::abs(a.weight) * (1.0 + std::pow(a.xi, beta));
  std::lock_guard<std::mutex> lock(mutex_);
  moments_.emplace(beta, m);
  return m;
}

std::vector<double> KernelMeasure::lbeta_weights(double beta) const {
  if (beta < 0.0) throw InvalidInput("beta must be >= 0");
  std::vector<double> out(atoms_.size());
  for (std::size_t k = 0; k < atoms_.size(); ++k)
    out[k] = std::abs(atoms_[k].weight) * (1.0 + std::pow(atoms_[k].xi, beta));
  return out;
}

bool KernelMeasure::same_atoms(const KernelMeasure& other) const noexcept {
  if (atoms_.size() != other.atoms_.size()) return false;
  for (std::size_t k = 0; k < atoms_.size(); ++k) {
    if (atoms_[k].xi != other.atoms_[k].xi || atoms_[k].weight != other.atoms_[k].weight) return false;
  }
  return true;
}

double phi_eval(const KernelMeasure& measure, double v) {
  if (v < 0.0) throw InvalidInput("phi_eval needs v >= 0");
  double s = 0.0;
  for (const Atom& a : measure.atoms()) s += a.weight * std::exp(-v * a.xi);
  return s;
}

double moment_check(const KernelMeasure& measure, double beta) { return measure.moment(beta); }

Value project(const std::vector<Value>& per_atom, const KernelMeasure& measure) {
  if (per_atom.size() != measure.size()) throw InvalidInput("per-atom values do not match the measure");
  if (per_atom.empty()) throw InvalidInput("cannot project over an empty measure");
  Value out = Value::Zero(per_atom[0].rows(), per_atom[0].cols());
  for (std::size_t k = 0; k < per_atom.size(); ++k) {
    if (per_atom[k].rows() != out.rows() || per_atom[k].cols() != out.cols())
      throw InvalidInput("per-atom values have inconsistent shapes");
    out += measure.weight(k) * per_atom[k];
  }
  return out;
}

namespace {

double param(const std::map<std::string, double>& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

}  // namespace

Density make_density(const std::string& name, const std::map<std::string, double>& params) {
  Density d;
  d.name = name;
  if (name == "exp") {
    double c = param(params, "scale", 1.0);
    double lambda = param(params, "rate", 1.0);
    if (!(lambda > 0.0)) throw InvalidInput("exp density needs rate > 0");
    d.phi_hat = [c, lambda](double xi) { return c * std::exp(-lambda * xi); };
    d.phi_exact = [c, lambda](double v) { return c / (lambda + v); };
    d.decay_rate = lambda;
  } else if (name == "gamma") {
    double c = param(params, "scale", 1.0);
    double k = param(params, "shape", 2.0);
    double lambda = param(params, "rate", 1.0);
    if (!(lambda > 0.0) || !(k > 0.0)) throw InvalidInput("gamma density needs shape > 0 and rate > 0");
    double norm = c / std::tgamma(k);
    d.phi_hat = [norm, k, lambda](double xi) {
      return xi == 0.0 ? (k == 1.0 ? norm : 0.0) : norm * std::pow(xi, k - 1.0) * std::exp(-lambda * xi);
    };
    d.phi_exact = [c, k, lambda](double v) { return c / std::pow(lambda + v, k); };
    d.decay_rate = lambda;
  } else if (name == "point") {
    d.point_mass = true;
    d.atoms.push_back({param(params, "xi", 0.0), param(params, "weight", 1.0)});
  } else {
    throw InvalidInput("unknown density '" + name + "'");
  }
  return d;
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw InvalidInput("Gauss-Legendre needs n >= 1");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  if (n == 1) {
    weights[0] = 2.0;
    return;
  }
  const double pi = 3.14159265358979323846;
  auto legendre = [n](double x, double& dp) {
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    return p1;
  };
  for (int i = 0; i < n / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double dx = legendre(x, dp) / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    legendre(x, dp);
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  if (n % 2 == 1) {
    double dp = 0.0;
    legendre(0.0, dp);
    weights[n / 2] = 2.0 / (dp * dp);
  }
}

namespace {

std::vector<Atom> graded_panels(const Density& density, int n_nodes, int panels, double cut) {
  int q = n_nodes / panels;
  std::vector<double> x, w;
  gauss_legendre(q, x, w);
  std::vector<double> breaks{0.0};
  for (int p = 0; p < panels; ++p) breaks.push_back(cut / std::ldexp(1.0, panels - 1 - p));
  std::vector<Atom> atoms;
  for (int p = 0; p < panels; ++p) {
    double a = breaks[p], b = breaks[p + 1];
    for (int i = 0; i < q; ++i) {
      double xi = 0.5 * (b - a) * x[i] + 0.5 * (a + b);
      atoms.push_back({xi, 0.5 * (b - a) * w[i] * density.phi_hat(xi)});
    }
  }
  return atoms;
}

}  // namespace

KernelMeasure build_quadrature(const Density& density, const QuadratureOptions& options, QuadratureReport* report) {
  if (density.point_mass) {
    KernelMeasure m(density.atoms, Provenance::native_atomic);
    m.declare_beta(options.beta);
    if (report) *report = {0.0, 0, 0.0};
    return m;
  }
  if (options.n_nodes < 1) throw InvalidInput("n_nodes must be positive");
  if (options.beta < 0.0) throw InvalidInput("beta must be >= 0");
  double cut = options.tail_cut > 0.0 ? options.tail_cut : 50.0 / density.decay_rate;

  std::vector<double> reference;
  for (double v : options.validation) {
    if (density.phi_exact) {
      reference.push_back(density.phi_exact(v));
    } else {
      boost::math::quadrature::exp_sinh<double> integrator;
      reference.push_back(integrator.integrate([&](double xi) { return std::exp(-v * xi) * density.phi_hat(xi); }));
    }
  }

  double best_err = std::numeric_limits<double>::infinity();
  std::vector<Atom> best;
  int best_panels = 0;
  for (int panels = 1; panels <= options.n_nodes; ++panels) {
    if (options.n_nodes % panels != 0 || options.n_nodes / panels < 4) continue;
    std::vector<Atom> atoms = graded_panels(density, options.n_nodes, panels, cut);
    double err = 0.0;
    for (std::size_t i = 0; i < options.validation.size(); ++i) {
      double approx = 0.0;
      for (const Atom& a : atoms) approx += a.weight * std::exp(-options.validation[i] * a.xi);
      err = std::max(err, std::abs(approx - reference[i]));
    }
    if (err < best_err) {
      best_err = err;
      best = std::move(atoms);
      best_panels = panels;
    }
  }
  if (best.empty()) {
    best = graded_panels(density, options.n_nodes, 1, cut);
    best_panels = 1;
    best_err = 0.0;
    for (std::size_t i = 0; i < options.validation.size(); ++i) {
      double approx = 0.0;
      for (const Atom& a : best) approx += a.weight * std::exp(-options.validation[i] * a.xi);
      best_err = std::max(best_err, std::abs(approx - reference[i]));
    }
  }
  if (report) *report = {best_err, best_panels, cut};
  if (!(best_err <= options.tolerance))
    throw QuadratureFailure("kernel quadrature missed tolerance for density '" + density.name + "' (achieved " +
                                std::to_string(best_err) + ")", best_err);
  KernelMeasure m(std::move(best), Provenance::quadrature);
  m.declare_beta(options.beta);
  return m;
}

}  // namespace convrough
