#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace convrough {

using Value = Eigen::MatrixXd;

struct Atom {
  double xi;
  double weight;
};

enum class Provenance { native_atomic, quadrature };

// Atomic representation of the Laplace density of a kernel phi.
class KernelMeasure {
 public:
  KernelMeasure() = default;
  explicit KernelMeasure(std::vector<Atom> atoms, Provenance provenance = Provenance::native_atomic);
  KernelMeasure(const KernelMeasure& other);
  KernelMeasure& operator=(const KernelMeasure& other);

  std::size_t size() const noexcept { return atoms_.size(); }
  const Atom& atom(std::size_t k) const { return atoms_[k]; }
  double xi(std::size_t k) const { return atoms_[k].xi; }
  double weight(std::size_t k) const { return atoms_[k].weight; }
  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  Provenance provenance() const noexcept { return provenance_; }

  // Sum |w_k| (1 + xi_k^beta), cached per beta.
  double moment(double beta) const;
  // Per-atom factor |w_k| (1 + xi_k^beta).
  std::vector<double> lbeta_weights(double beta) const;

  void declare_beta(double beta) { declared_beta_ = beta; }
  double declared_beta() const noexcept { return declared_beta_; }

  bool same_atoms(const KernelMeasure& other) const noexcept;

 private:
  std::vector<Atom> atoms_;
  Provenance provenance_ = Provenance::native_atomic;
  double declared_beta_ = 1.0;
  mutable std::mutex mutex_;
  mutable std::map<double, double> moments_;
};

using MeasurePtr = std::shared_ptr<const KernelMeasure>;

double phi_eval(const KernelMeasure& measure, double v);
double moment_check(const KernelMeasure& measure, double beta);
Value project(const std::vector<Value>& per_atom, const KernelMeasure& measure);

struct Density {
  std::string name;
  std::function<double(double)> phi_hat;
  // Closed-form Laplace transform when known; otherwise validation integrates phi_hat on [0, inf).
  std::function<double(double)> phi_exact;
  double decay_rate = 1.0;
  bool point_mass = false;
  std::vector<Atom> atoms;
};

// Catalog: "exp" {scale c, rate lambda}: c e^{-lambda xi};
// "gamma" {scale c, shape k, rate lambda}: c xi^{k-1} e^{-lambda xi} / Gamma(k);
// "point" {xi, weight}: a single atom.
Density make_density(const std::string& name, const std::map<std::string, double>& params);

struct QuadratureOptions {
  int n_nodes = 64;
  double beta = 1.0;
  double tail_cut = 0.0;  // 0 selects 50 / decay_rate
  double tolerance = 1e-8;
  std::vector<double> validation{0.1, 1.0, 10.0};
};

struct QuadratureReport {
  double achieved = 0.0;
  int panels = 0;
  double tail_cut = 0.0;
};

KernelMeasure build_quadrature(const Density& density, const QuadratureOptions& options,
                               QuadratureReport* report = nullptr);

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace convrough
