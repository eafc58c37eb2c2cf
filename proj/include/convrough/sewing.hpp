#pragma once

#include <functional>
#include <vector>

#include "convrough/increments.hpp"

namespace convrough {

using Germ = std::function<Value(double t, double s)>;

struct SewingOptions {
  int max_level = 14;
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  bool early_stop = true;
};

struct SewingDiagnostics {
  std::vector<Value> partial_sums;
  std::vector<double> differences;  // differences[l] = |S_l - S_{l-1}|, differences[0] = 0
  Value richardson;                 // one step, fitted decay rate
  Value romberg;                    // two stages over the last three levels (rates 1/2, 1/4)
  double decay_ratio = 0.0;
  int levels_used = 0;
  bool early_stopped = false;
};

struct SewingResult {
  Value value;  // raw sum at the last level computed
  SewingDiagnostics diagnostics;
};

// Level-n partition of [s, t] into 2^n equal cells.
struct DyadicScheme {
  double s = 0.0;
  double t = 1.0;
  int max_level = 14;
  std::vector<double> partition(int level) const;
};

Value lambda_dyadic(const Germ& b, double s, double t, int level, int max_level = 30);
Value lambda_dyadic(const Increment2& b, double s, double t, int level, int max_level = 30);
Value lambda_tilde_dyadic(const Germ& b, double xi, double s, double t, int level, int max_level = 30);
Value lambda_tilde_dyadic(const LaplaceIncrement2& b, std::size_t k, double s, double t, int level,
                          int max_level = 30);

SewingResult compensated_sum(const Germ& g, double s, double t, int level, const SewingOptions& options = {});
SewingResult compensated_sum_tilde(const Germ& g, double xi, double s, double t, int level,
                                   const SewingOptions& options = {});
SewingResult compensated_sum_tilde(const LaplaceIncrement2& g, std::size_t k, double s, double t, int level,
                                   const SewingOptions& options = {});

// 2 + 2^mu zeta(mu)
double sewing_constant(double mu);

struct SewingBoundReport {
  double lambda_norm = 0.0;
  double h_norm = 0.0;
  double c_mu = 0.0;
  double bound = 0.0;
  bool holds = true;
  std::size_t worst_t = 0;
  std::size_t worst_s = 0;
};

// Checks ||Lambda h||_mu <= c_mu N[h; (rho, mu - rho)] on the grid, with Lambda h realized by the
// level-`level` dyadic M of B.
SewingBoundReport sewing_bound_check(const Increment3& h, const Increment2& b, double mu, double rho, int level = 10);
SewingBoundReport sewing_bound_check(const LaplaceIncrement3& h, const LaplaceIncrement2& b, double mu, double rho,
                                     double beta, int level = 10);

}  // namespace convrough
