#include "convrough/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "convrough/controlled.hpp"
#include "convrough/csv.hpp"
#include "convrough/errors.hpp"
#include "convrough/increments.hpp"
#include "convrough/kernels.hpp"
#include "convrough/ode_oracle.hpp"
#include "convrough/sewing.hpp"

namespace convrough {

using nlohmann::json;

namespace {

const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw InvalidInput(std::string("missing field '") + key + "'");
  return j.at(key);
}

template <class T>
T number(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_number()) throw InvalidInput(std::string("field '") + key + "' must be a number");
  return v.get<T>();
}

template <class T>
T number_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? number<T>(j, key) : fallback;
}

Eigen::MatrixXd matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw InvalidInput(std::string(what) + " must be a nonempty array");
  if (!j.front().is_array()) {
    Eigen::MatrixXd m(1, static_cast<Eigen::Index>(j.size()));
    for (std::size_t c = 0; c < j.size(); ++c) m(0, static_cast<Eigen::Index>(c)) = j[c].get<double>();
    return m;
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j.front().size()));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != j.front().size()) throw InvalidInput(std::string(what) + " is ragged");
    for (std::size_t c = 0; c < j[r].size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
  }
  return m;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string brief(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

double fitted_rate(const std::vector<double>& diffs) {
  const double n = static_cast<double>(diffs.size());
  double mx = (n - 1.0) / 2.0, my = 0.0;
  for (double d : diffs) my += std::log2(d);
  my /= n;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    double x = static_cast<double>(i) - mx;
    num += x * (std::log2(diffs[i]) - my);
    den += x * x;
  }
  return -num / den;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<std::uint64_t> seeds_of(const json& config) {
  if (config.contains("seeds")) {
    const json& s = config.at("seeds");
    if (s.is_string()) return seed_expand(s.get<std::string>());
    if (s.is_array()) {
      std::vector<std::uint64_t> out;
      for (const auto& v : s) out.push_back(v.get<std::uint64_t>());
      return out;
    }
    throw InvalidInput("'seeds' must be a range string or an array");
  }
  if (config.contains("seed")) return {number<std::uint64_t>(config, "seed")};
  throw InvalidInput("seeds must be explicit: give 'seed' or 'seeds'");
}

class Run {
 public:
  Run(const json& config, const RunOptions& options, RunResult& result)
      : config_(config), options_(options), result_(result) {}

  bool enabled(const std::string& name) const {
    if (options_.checks.empty()) return true;
    for (const auto& c : options_.checks)
      if (name == c || name.rfind(c + ".", 0) == 0) return true;
    return false;
  }

  // Parameters for a configured check, or nullptr when it is absent or filtered out.
  const json* check_params(const std::string& name) const {
    if (!config_.contains("checks") || !config_.at("checks").contains(name) || !enabled(name)) return nullptr;
    return &config_.at("checks").at(name);
  }

  void record(const std::string& name, bool passed, double measured, double threshold, std::string detail = "") {
    std::lock_guard<std::mutex> lock(mutex_);
    result_.checks.push_back({name, passed, measured, threshold, std::move(detail)});
  }

  std::string artifact(const std::string& file) {
    std::string path = (std::filesystem::path(result_.out_dir) / file).string();
    result_.artifacts.push_back(file);
    return path;
  }

  const json& config() const { return config_; }
  unsigned jobs() const { return std::max(1u, options_.jobs); }

 private:
  const json& config_;
  const RunOptions& options_;
  RunResult& result_;
  std::mutex mutex_;
};

std::shared_ptr<TimeGrid> random_grid(std::mt19937_64& rng, std::size_t points) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p{0.0};
  double t = 0.0;
  for (std::size_t i = 1; i < points; ++i) p.push_back(t += 0.05 + u(rng));
  return std::make_shared<TimeGrid>(std::move(p));
}

void verify_algebra(Run& run, const json& params, std::uint64_t seed) {
  const double tol = number<double>(params, "tolerance");
  const int trials = number_or<int>(params, "trials", 100);
  const auto points = number_or<std::size_t>(params, "points", 16);
  const auto atoms = number_or<std::size_t>(params, "atoms", 3);
  std::mt19937_64 rng(derive_seed(seed, 1));
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uni(0.0, 4.0);
  double dd = 0.0, tt = 0.0, tw = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    auto grid = random_grid(rng, points);
    std::vector<Atom> at;
    for (std::size_t k = 0; k < atoms; ++k) at.push_back({uni(rng) + static_cast<double>(k), normal(rng)});
    auto measure = std::make_shared<KernelMeasure>(at);
    std::vector<Value> g;
    double scale = 0.0;
    for (std::size_t i = 0; i < points; ++i) {
      g.push_back(Value::NullaryExpr(1, 2, [&]() { return normal(rng); }));
      scale = std::max(scale, g.back().cwiseAbs().maxCoeff());
    }
    std::vector<std::vector<Value>> gl(atoms);
    for (auto& row : gl)
      for (std::size_t i = 0; i < points; ++i) row.push_back(Value::NullaryExpr(1, 2, [&]() { return normal(rng); }));
    Increment1 inc(grid, g);
    LaplaceIncrement1 linc(grid, measure, gl);
    Increment3 h = delta2(delta1(inc));
    LaplaceIncrement3 hl = delta_tilde(delta_tilde(linc));
    for (std::size_t s = 0; s < points; ++s)
      for (std::size_t u = s; u < points; ++u)
        for (std::size_t t = u; t < points; ++t) {
          dd = std::max(dd, h(t, u, s).cwiseAbs().maxCoeff() / std::max(1.0, scale));
          for (std::size_t k = 0; k < atoms; ++k) {
            tt = std::max(tt, hl(k, t, u, s).cwiseAbs().maxCoeff() / std::max(1.0, scale));
            double xi = measure->xi(k);
            const TimeGrid& gr = *grid;
            double lhs = twist(xi, gr[s], gr[t]) - twist(xi, gr[u], gr[t]) - twist(xi, gr[s], gr[u]);
            tw = std::max(tw, std::abs(lhs - twist(xi, gr[u], gr[t]) * twist(xi, gr[s], gr[u])));
          }
        }
  }
  if (run.enabled("algebraic_exactness.delta_delta")) run.record("algebraic_exactness.delta_delta", dd <= tol, dd, tol);
  if (run.enabled("algebraic_exactness.delta_tilde_tilde"))
    run.record("algebraic_exactness.delta_tilde_tilde", tt <= tol, tt, tol);
  if (run.enabled("algebraic_exactness.twist_identity"))
    run.record("algebraic_exactness.twist_identity", tw <= tol, tw, tol);
}

void verify_sewing_bound(Run& run, const json& params, std::uint64_t seed) {
  const int trials = number_or<int>(params, "trials", 100);
  const double mu = number<double>(params, "mu"), rho = number<double>(params, "rho");
  const int level = number_or<int>(params, "level", 10);
  const auto points = number_or<std::size_t>(params, "points", 8);
  std::mt19937_64 rng(derive_seed(seed, 2));
  std::normal_distribution<double> normal;
  auto grid = std::make_shared<TimeGrid>(TimeGrid::uniform(points - 1));
  auto measure = std::make_shared<KernelMeasure>(std::vector<Atom>{{0.0, 1.0}, {1.0, 0.5}, {4.0, 0.25}});
  int violations = 0;
  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    double c0 = normal(rng), c1 = normal(rng), c2 = normal(rng), f1 = 1.0 + 4.0 * std::abs(normal(rng));
    auto noise = [=](double t, double s) { return c0 + c1 * std::sin(f1 * t) + c2 * std::cos(f1 * s); };
    LaplaceIncrement2 b(grid, measure, {1, 1}, [=](std::size_t, double t, double s) -> Value {
      return Value::Constant(1, 1, std::pow(t - s, 1.6) * noise(t, s));
    });
    LaplaceIncrement3 h = delta_tilde(b);
    SewingBoundReport r = sewing_bound_check(h, b, mu, rho, measure->declared_beta(), level);
    if (!r.holds) ++violations;
    worst = std::max(worst, r.bound > 0.0 ? r.lambda_norm / r.bound : 0.0);
  }
  run.record("sewing_bound", violations == 0, static_cast<double>(violations), 0.0,
             "worst ratio " + brief(worst));
}

void verify_young_exactness(Run& run, const json& params) {
  const double tol = number<double>(params, "tolerance");
  const int level = number_or<int>(params, "level", 12);
  SewingOptions opt;
  opt.early_stop = false;
  double worst = 0.0;
  Eigen::RowVectorXd one = Eigen::RowVectorXd::Ones(1);
  for (std::string name : {"linear", "sin"}) {
    SmoothFunction f = smooth_function(name, one);
    for (double xi : {0.0, 1.0, 5.0}) {
      Germ germ = [&](double t, double s) -> Value { return f.x1_tilde(xi, s, t) * s; };
      SewingResult r = compensated_sum_tilde(germ, xi, 0.0, 1.0, level, opt);
      double exact;
      if (name == "linear")
        exact = xi == 0.0 ? 0.5 : (xi - 1.0 + std::exp(-xi)) / (xi * xi);
      else {
        // int_0^1 e^{-xi (1 - v)} v cos v dv by parts against the closed-form x~1
        double a = 0.0;
        const int n = 2000;
        std::vector<double> nodes, weights;
        gauss_legendre(40, nodes, weights);
        for (int p = 0; p < n; ++p) {
          double lo = p / static_cast<double>(n), hi = (p + 1) / static_cast<double>(n);
          for (std::size_t q = 0; q < nodes.size(); ++q) {
            double v = 0.5 * (lo + hi) + 0.5 * (hi - lo) * nodes[q];
            a += 0.5 * (hi - lo) * weights[q] * std::exp(-xi * (1.0 - v)) * v * std::cos(v);
          }
        }
        exact = a;
      }
      worst = std::max(worst, std::abs(r.diagnostics.romberg(0, 0) - exact) / std::abs(exact));
    }
  }
  run.record("young_exactness", worst <= tol, worst, tol);
}

void verify_lift(Run& run, const json* chasles, const json* chen, std::uint64_t seed) {
  const json& p = chen ? *chen : *chasles;
  std::vector<double> hursts;
  if (p.contains("hurst"))
    for (const auto& h : p.at("hurst")) hursts.push_back(h.get<double>());
  else
    hursts = {0.4, 0.7};
  const auto cells = number_or<std::size_t>(p, "cells", 256);
  const int triples = number_or<int>(p, "triples", 50);
  const int samples = number_or<int>(p, "samples", 2);
  auto measure = std::make_shared<KernelMeasure>(std::vector<Atom>{{0.5, 0.6}, {2.0, 0.3}, {6.0, 0.1}});
  auto grid = std::make_shared<TimeGrid>(TimeGrid::uniform(cells));
  double chasles_worst = 0.0, chen_worst = 0.0;
  std::mt19937_64 rng(derive_seed(seed, 3));
  std::uniform_int_distribution<std::size_t> pick(0, cells);
  for (double hurst : hursts)
    for (int sample = 0; sample < samples; ++sample) {
      auto x = std::make_shared<DriverPath>(sample_fbm(hurst, grid, 2, derive_seed(seed, 100 + sample)));
      RoughLift lift(x, measure, std::min(hurst, 0.5) - 0.02);
      for (int trial = 0; trial < triples; ++trial) {
        std::size_t i[3] = {pick(rng), pick(rng), pick(rng)};
        std::sort(i, i + 3);
        double s = (*grid)[i[0]], u = (*grid)[i[1]], t = (*grid)[i[2]];
        for (std::size_t k = 0; k < measure->size(); ++k) {
          if (chasles) {
            Eigen::RowVectorXd ts = lift.x1_tilde(s, t, k);
            Eigen::RowVectorXd r = ts - lift.x1_tilde(u, t, k) - std::exp(-measure->xi(k) * (t - u)) * lift.x1_tilde(s, u, k);
            chasles_worst = std::max(chasles_worst, r.norm() / std::max(1.0, ts.norm()));
          }
          if (chen && s < u && u < t) {
            Eigen::MatrixXd a = lift.x3_tilde(t, u, s, k), b = lift.x3_tilde_direct(t, u, s, k);
            double scale = std::max(a.norm(), b.norm());
            if (scale > 0.0) chen_worst = std::max(chen_worst, (a - b).norm() / scale);
          }
        }
      }
    }
  if (chasles) {
    double tol = number<double>(*chasles, "tolerance");
    run.record("twisted_chasles", chasles_worst <= tol, chasles_worst, tol);
  }
  if (chen) {
    double tol = number<double>(*chen, "tolerance");
    run.record("chen_relation", chen_worst <= tol, chen_worst, tol);
  }
}

void verify_degeneration(Run& run, const json& params, std::uint64_t seed) {
  const auto cells = number_or<std::size_t>(params, "cells", 256);
  const double hurst = number_or<double>(params, "hurst", 0.4);
  auto grid = std::make_shared<TimeGrid>(TimeGrid::uniform(cells));
  auto x = std::make_shared<DriverPath>(sample_fbm(hurst, grid, 2, derive_seed(seed, 4)));
  auto measure = std::make_shared<KernelMeasure>(std::vector<Atom>{{0.0, 1.0}});
  RoughLift lift(x, measure, 0.38);
  Eigen::MatrixXd off(2, 2), sc(2, 2);
  off << 1.0, 0.5, -0.3, 1.0;
  sc << 0.5, 0.8, 0.7, -0.4;
  SigmaField sigma = make_sigma("tanh", off, sc);
  Eigen::RowVectorXd a(2);
  a << 0.2, -0.1;
  SolverConfig c;
  c.gamma = 0.38;
  c.kappa = 0.35;
  c.sub_level = number_or<int>(params, "sub_level", 2);
  c.tolerance = number_or<double>(params, "solver_tolerance", 1e-10);
  Solution s1 = solve_rough(lift, sigma, a, c);
  Solution s2 = solve_rough_ode(*x, sigma, a, c);
  bool same = s1.mesh_y.size() == s2.mesh_y.size() &&
              std::memcmp(s1.mesh_y.data(), s2.mesh_y.data(), sizeof(double) * static_cast<std::size_t>(s1.mesh_y.size())) == 0;
  run.record("degeneration", same, (s1.mesh_y - s2.mesh_y).cwiseAbs().maxCoeff(), 0.0, "bitwise comparison");
}

void run_verify(Run& run) {
  const json& cfg = run.config();
  std::uint64_t seed = number<std::uint64_t>(cfg, "seed");
  std::set<std::string> suites;
  for (const auto& s : require(cfg, "suites")) suites.insert(s.get<std::string>());
  for (const auto& s : suites)
    if (s != "algebra" && s != "sewing" && s != "lift" && s != "solver") throw InvalidInput("unknown suite '" + s + "'");
  auto need = [&](const std::string& name) -> const json* {
    if (!run.enabled(name)) return nullptr;
    if (!cfg.contains("checks") || !cfg.at("checks").contains(name))
      throw InvalidInput("check '" + name + "' needs explicit parameters under 'checks'");
    return &cfg.at("checks").at(name);
  };
  if (suites.count("algebra"))
    if (const json* p = need("algebraic_exactness")) verify_algebra(run, *p, seed);
  if (suites.count("sewing")) {
    if (const json* p = need("sewing_bound")) verify_sewing_bound(run, *p, seed);
    if (const json* p = need("young_exactness")) verify_young_exactness(run, *p);
  }
  if (suites.count("lift") || suites.count("algebra")) {
    const json* chasles = need("twisted_chasles");
    const json* chen = need("chen_relation");
    if (chasles || chen) verify_lift(run, chasles, chen, seed);
  }
  if (suites.count("solver"))
    if (const json* p = need("degeneration")) verify_degeneration(run, *p, seed);
}

void write_solution(Run& run, const Solution& sol, bool per_atom, const Eigen::MatrixXd* oracle) {
  Table t;
  const Eigen::Index d = sol.y.cols();
  t.header.push_back("t");
  for (Eigen::Index j = 0; j < d; ++j) t.header.push_back("y_" + std::to_string(j + 1));
  if (per_atom)
    for (std::size_t k = 0; k < sol.measure->size(); ++k)
      for (Eigen::Index j = 0; j < d; ++j) t.header.push_back("ytilde_" + std::to_string(k) + "_" + std::to_string(j + 1));
  if (oracle)
    for (Eigen::Index j = 0; j < d; ++j) t.header.push_back("rk4_y_" + std::to_string(j + 1));
  for (std::size_t i = sol.first; i <= sol.last; ++i) {
    auto r = static_cast<Eigen::Index>(i);
    std::vector<double> row{(*sol.grid)[i]};
    for (Eigen::Index j = 0; j < d; ++j) row.push_back(sol.y(r, j));
    if (per_atom)
      for (std::size_t k = 0; k < sol.measure->size(); ++k)
        for (Eigen::Index j = 0; j < d; ++j) row.push_back(sol.path->ytilde_table(k)(r, j));
    if (oracle)
      for (Eigen::Index j = 0; j < d; ++j) row.push_back((*oracle)(r, j));
    t.rows.push_back(std::move(row));
  }
  emit_csv(t, run.artifact("solution.csv"));

  Table diag;
  diag.header = {"start",        "end",          "t0",       "t1",          "n_param",          "index",
                 "iterations",   "contraction",  "difference", "reruns",    "sup_ytilde",       "holder_ytilde",
                 "sup_zeta",     "holder_zeta",  "holder_remainder", "q_norm", "start_l1",        "ball_ok",
                 "start_ok"};
  for (const auto& v : sol.intervals)
    diag.rows.push_back({static_cast<double>(v.start), static_cast<double>(v.end), v.t0, v.t1,
                         static_cast<double>(v.n_param), static_cast<double>(v.index),
                         static_cast<double>(v.iterations), v.contraction, v.last_difference,
                         static_cast<double>(v.reruns), v.sup_ytilde, v.holder_ytilde, v.sup_zeta, v.holder_zeta,
                         v.holder_remainder, v.q_norm, v.start_l1, v.ball_ok ? 1.0 : 0.0, v.start_ok ? 1.0 : 0.0});
  emit_csv(diag, run.artifact("diagnostics.csv"));
}

void run_solve(Run& run, bool young) {
  const json& cfg = run.config();
  std::uint64_t seed = seeds_of(cfg).front();
  auto measure = measure_from_json(require(cfg, "kernel"));
  const json& dspec = require(cfg, "driver");
  auto driver = std::make_shared<DriverPath>(driver_from_json(dspec, seed));
  Eigen::MatrixXd a0 = matrix_from_json(require(cfg, "initial"), "initial");
  Eigen::RowVectorXd a = a0.row(0);
  SigmaField sigma = sigma_from_json(require(cfg, "sigma"), driver->dims(), a.size());
  SolverConfig sc = solver_from_json(require(cfg, "solver"), young);
  LiftFlags flags;
  flags.second_order = !young;
  RoughLift lift(driver, measure, sc.gamma, flags);
  Solution sol = young ? solve_young(lift, sigma, a, sc) : solve_rough(lift, sigma, a, sc);

  Eigen::MatrixXd oracle;
  bool have_oracle = false;
  if (const json* p = run.check_params("solver_vs_ode")) {
    double tol = number<double>(*p, "tolerance");
    double step = number<double>(*p, "step");
    if (require(dspec, "kind").get<std::string>() != "smooth")
      throw InvalidInput("solver_vs_ode needs a smooth driver");
    oracle = rk4_volterra(*measure, sigma, smooth_from_json(dspec), a, driver->grid().points(), step);
    have_oracle = true;
    double err = (sol.y - oracle).cwiseAbs().maxCoeff();
    run.record("solver_vs_ode", err <= tol, err, tol, "sup error against RK4");
  }
  if (const json* p = run.check_params("picard_residual")) {
    double factor = number<double>(*p, "factor");
    double res = picard_residual(sol, lift, sigma, young);
    run.record("picard_residual", res <= factor * sc.tolerance, res, factor * sc.tolerance);
  }
  write_solution(run, sol, cfg.value("per_atom", false), have_oracle ? &oracle : nullptr);
  write_driver_csv(*driver, run.artifact("driver.csv"));
}

void run_convergence(Run& run) {
  const json& cfg = run.config();
  std::vector<std::uint64_t> seeds = seeds_of(cfg);
  auto measure = measure_from_json(require(cfg, "kernel"));
  const json& levels = require(cfg, "levels");
  int lo = levels.at(0).get<int>(), hi = levels.at(1).get<int>();
  if (!(0 < lo && lo + 1 < hi && hi <= 12)) throw InvalidInput("levels must satisfy 0 < lo, lo + 1 < hi <= 12");
  json dspec = require(cfg, "driver");
  dspec["cells"] = std::size_t{1} << hi;
  Eigen::RowVectorXd a = matrix_from_json(require(cfg, "initial"), "initial").row(0);
  SolverConfig sc = solver_from_json(require(cfg, "solver"), false);
  sc.diagnostics = false;
  const json& sspec = require(cfg, "sigma");
  std::vector<std::vector<double>> diffs(seeds.size());
  parallel_for(seeds.size(), run.jobs(), [&](std::size_t i) {
    auto fine = std::make_shared<DriverPath>(driver_from_json(dspec, seeds[i]));
    SigmaField sigma = sigma_from_json(sspec, fine->dims(), a.size());
    std::size_t coarse = std::size_t{1} << lo;
    Eigen::MatrixXd previous;
    for (int level = lo; level <= hi; ++level) {
      auto x = std::make_shared<DriverPath>(fine->subsample(std::size_t{1} << (hi - level)));
      RoughLift lift(x, measure, sc.gamma);
      Solution s = solve_rough(lift, sigma, a, sc);
      Eigen::MatrixXd y(static_cast<Eigen::Index>(coarse + 1), a.size());
      std::size_t stride = std::size_t{1} << (level - lo);
      for (std::size_t p = 0; p <= coarse; ++p) y.row(static_cast<Eigen::Index>(p)) = s.y.row(static_cast<Eigen::Index>(p * stride));
      if (level > lo) diffs[i].push_back((y - previous).cwiseAbs().maxCoeff());
      previous = y;
    }
  });
  Table table{{"seed", "level", "sup_diff"}, {}};
  Table rates{{"seed", "rate"}, {}};
  std::vector<double> fitted;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    for (std::size_t j = 0; j < diffs[i].size(); ++j)
      table.rows.push_back({static_cast<double>(seeds[i]), static_cast<double>(lo + 1 + static_cast<int>(j)), diffs[i][j]});
    fitted.push_back(fitted_rate(diffs[i]));
    rates.rows.push_back({static_cast<double>(seeds[i]), fitted.back()});
  }
  emit_csv(table, run.artifact("convergence.csv"));
  emit_csv(rates, run.artifact("rates.csv"));
  if (const json* p = run.check_params("rough_self_convergence")) {
    double min_rate = number<double>(*p, "min_rate");
    std::size_t min_pass = number<std::size_t>(*p, "min_passing");
    std::size_t passing = static_cast<std::size_t>(std::count_if(fitted.begin(), fitted.end(), [&](double r) { return r > min_rate; }));
    run.record("rough_self_convergence", passing >= min_pass, static_cast<double>(passing), static_cast<double>(min_pass),
               "seeds with fitted rate above " + brief(min_rate));
  }
}

void run_ensemble(Run& run) {
  const json& cfg = run.config();
  std::vector<std::uint64_t> seeds = seeds_of(cfg);
  const json& dspec = require(cfg, "driver");
  double hurst = number<double>(dspec, "hurst");
  std::vector<HolderEstimate> est(seeds.size());
  parallel_for(seeds.size(), run.jobs(), [&](std::size_t i) {
    DriverPath x = driver_from_json(dspec, seeds[i]);
    std::vector<Value> v;
    for (Eigen::Index r = 0; r < x.values().rows(); ++r) v.emplace_back(x.values().row(r));
    est[i] = estimate_holder_exponent(Increment1(x.grid_ptr(), std::move(v)));
  });
  Table t{{"seed", "estimate", "residual"}, {}};
  std::vector<double> values;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    t.rows.push_back({static_cast<double>(seeds[i]), est[i].exponent, est[i].residual});
    values.push_back(est[i].exponent);
  }
  emit_csv(t, run.artifact("ensemble.csv"));
  if (const json* p = run.check_params("holder_calibration")) {
    double tol = number<double>(*p, "tolerance");
    double dev = std::abs(median(values) - hurst);
    run.record("holder_calibration", dev <= tol, dev, tol, "|median estimate - H|");
  }
}

void run_covariance(Run& run) {
  const json& cfg = run.config();
  std::vector<std::uint64_t> seeds = seeds_of(cfg);
  const json& dspec = require(cfg, "driver");
  double hurst = number<double>(dspec, "hurst");
  double xi = number<double>(cfg, "xi"), eta = number<double>(cfg, "eta");
  std::vector<Atom> atoms{{xi, 1.0}};
  if (eta != xi) atoms.push_back({eta, 1.0});
  auto measure = std::make_shared<KernelMeasure>(atoms);
  std::size_t kx = measure->xi(0) == xi ? 0 : 1, ke = measure->xi(0) == eta ? 0 : 1;
  std::vector<double> a(seeds.size()), b(seeds.size());
  parallel_for(seeds.size(), run.jobs(), [&](std::size_t i) {
    auto x = std::make_shared<DriverPath>(driver_from_json(dspec, seeds[i]));
    RoughLift lift(x, measure, std::min(hurst, 0.99));
    double T = x->grid().horizon();
    a[i] = lift.x1_tilde(0.0, T, kx)(0);
    b[i] = lift.x1_tilde(0.0, T, ke)(0);
  });
  Table t{{"seed", "x1_xi", "x1_eta"}, {}};
  for (std::size_t i = 0; i < seeds.size(); ++i) t.rows.push_back({static_cast<double>(seeds[i]), a[i], b[i]});
  emit_csv(t, run.artifact("covariance.csv"));
  if (const json* p = run.check_params("fbm_covariance")) {
    double sigmas = number<double>(*p, "standard_errors");
    const double n = static_cast<double>(seeds.size());
    std::vector<double> prod(seeds.size());
    for (std::size_t i = 0; i < seeds.size(); ++i) prod[i] = a[i] * b[i];
    double mean = 0.0;
    for (double v : prod) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : prod) var += (v - mean) * (v - mean);
    var /= (n - 1.0);
    double se = std::sqrt(var / n);
    double T = number_or<double>(dspec, "horizon", 1.0);
    double exact = wiener_cov_x1(hurst, xi, eta, {0.0, T}, {0.0, T});
    double z = std::abs(mean - exact) / se;
    run.record("fbm_covariance", z <= sigmas, z, sigmas,
               "monte carlo " + brief(mean) + " vs quadrature " + brief(exact));
  }
}

void write_manifest(const json& config, const RunResult& result, const std::string& text, double seconds) {
  json m;
  m["config_hash"] = hex(fnv1a(text.empty() ? config.dump() : text));
  m["library_version"] = kLibraryVersion;
  m["wall_clock_seconds"] = seconds;
  m["kind"] = config.value("kind", "");
  m["kernels"] = kernels::active().name;
  m["exit_code"] = result.exit_code;
  if (!result.message.empty()) m["message"] = result.message;
  json checks = json::array();
  for (const auto& c : result.checks)
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"measured", c.measured}, {"threshold", c.threshold},
                      {"detail", c.detail}});
  m["checks"] = checks;
  m["artifacts"] = result.artifacts;
  std::ofstream out(std::filesystem::path(result.out_dir) / "run_manifest.json", std::ios::binary);
  out << m.dump(2) << "\n";
}

}  // namespace

std::vector<std::uint64_t> seed_expand(const std::string& spec) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(spec);
  std::string part;
  auto parse = [&](const std::string& s) -> std::uint64_t {
    std::size_t pos = 0;
    std::uint64_t v = 0;
    try {
      v = std::stoull(s, &pos);
    } catch (const std::exception&) {
      throw InvalidInput("malformed seed '" + s + "'");
    }
    if (pos != s.size() || s.empty() || s[0] == '-') throw InvalidInput("malformed seed '" + s + "'");
    return v;
  };
  while (std::getline(ss, part, ',')) {
    part.erase(0, part.find_first_not_of(" \t"));
    part.erase(part.find_last_not_of(" \t") + 1);
    auto dots = part.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse(part));
      continue;
    }
    std::uint64_t lo = parse(part.substr(0, dots)), hi = parse(part.substr(dots + 2));
    if (hi <= lo) throw InvalidInput("empty seed range '" + part + "'");
    for (std::uint64_t s = lo; s < hi; ++s) out.push_back(s);
  }
  if (out.empty()) throw InvalidInput("empty seed specification");
  std::set<std::uint64_t> unique(out.begin(), out.end());
  if (unique.size() != out.size()) throw InvalidInput("overlapping seed ranges in '" + spec + "'");
  return out;
}

MeasurePtr measure_from_json(const json& spec, QuadratureReport* report) {
  std::shared_ptr<KernelMeasure> m;
  if (spec.contains("atoms")) {
    std::vector<Atom> atoms;
    for (const auto& a : spec.at("atoms")) {
      if (!a.is_array() || a.size() != 2) throw InvalidInput("atoms must be [xi, w] pairs");
      atoms.push_back({a[0].get<double>(), a[1].get<double>()});
    }
    m = std::make_shared<KernelMeasure>(std::move(atoms));
  } else if (spec.contains("density")) {
    const json& d = spec.at("density");
    std::map<std::string, double> params;
    if (d.contains("params"))
      for (auto it = d.at("params").begin(); it != d.at("params").end(); ++it) params[it.key()] = it.value().get<double>();
    Density density = make_density(require(d, "name").get<std::string>(), params);
    if (density.point_mass) {
      m = std::make_shared<KernelMeasure>(density.atoms);
    } else {
      QuadratureOptions q;
      q.n_nodes = number_or<int>(d, "n_nodes", q.n_nodes);
      q.tail_cut = number_or<double>(d, "tail_cut", 0.0);
      q.beta = number_or<double>(d, "beta", q.beta);
      q.tolerance = number<double>(d, "tolerance");
      m = std::make_shared<KernelMeasure>(build_quadrature(density, q, report));
    }
  } else {
    throw InvalidInput("kernel needs 'atoms' or 'density'");
  }
  m->declare_beta(number_or<double>(spec, "beta", 1.0));
  return m;
}

SigmaField sigma_from_json(const json& spec, Eigen::Index n, Eigen::Index d) {
  std::string name = require(spec, "name").get<std::string>();
  Eigen::MatrixXd offset = spec.contains("offset") ? matrix_from_json(spec.at("offset"), "sigma offset")
                                                   : Eigen::MatrixXd::Zero(n, d);
  Eigen::MatrixXd scale = spec.contains("scale") ? matrix_from_json(spec.at("scale"), "sigma scale")
                                                 : Eigen::MatrixXd::Ones(n, d);
  Eigen::MatrixXd coupling =
      spec.contains("coupling") ? matrix_from_json(spec.at("coupling"), "sigma coupling") : Eigen::MatrixXd();
  if (offset.rows() != n || offset.cols() != d)
    throw InvalidInput("sigma offset must be " + std::to_string(n) + " x " + std::to_string(d));
  return make_sigma(name, offset, scale, coupling);
}

SolverConfig solver_from_json(const json& spec, bool young) {
  SolverConfig c;
  c.young = young;
  c.gamma = number<double>(spec, "gamma");
  c.kappa = number_or<double>(spec, "kappa", young ? c.gamma : c.kappa);
  c.sub_level = number_or<int>(spec, "sub_level", c.sub_level);
  c.tolerance = number<double>(spec, "tolerance");
  c.max_iterations = number_or<int>(spec, "max_iterations", c.max_iterations);
  c.n_start = number_or<std::size_t>(spec, "n_start", c.n_start);
  c.n_cap = number_or<std::size_t>(spec, "n_cap", c.n_cap);
  c.beta = number_or<double>(spec, "beta", young ? c.gamma : c.beta);
  c.alpha1 = number_or<double>(spec, "alpha1", c.alpha1);
  c.alpha2 = number_or<double>(spec, "alpha2", c.alpha2);
  c.diagnostics = spec.value("diagnostics", true);
  return c;
}

SmoothFunction smooth_from_json(const json& spec) {
  Eigen::MatrixXd c = spec.contains("coefficients") ? matrix_from_json(spec.at("coefficients"), "coefficients")
                                                    : Eigen::MatrixXd::Ones(1, number_or<Eigen::Index>(spec, "dims", 1));
  return smooth_function(require(spec, "function").get<std::string>(), c.row(0));
}

DriverPath driver_from_json(const json& spec, std::uint64_t seed) {
  std::string kind = require(spec, "kind").get<std::string>();
  if (kind == "csv") return read_driver_csv(require(spec, "file").get<std::string>());
  auto cells = number<std::size_t>(spec, "cells");
  double horizon = number_or<double>(spec, "horizon", 1.0);
  auto grid = std::make_shared<TimeGrid>(TimeGrid::uniform(cells, horizon));
  auto dims = number_or<Eigen::Index>(spec, "dims", 1);
  if (kind == "smooth") return sample_deterministic(smooth_from_json(spec), grid);
  if (kind == "fbm") return sample_fbm(number<double>(spec, "hurst"), grid, dims, seed);
  if (kind == "brownian") return sample_brownian(grid, dims, seed);
  throw InvalidInput("unknown driver kind '" + kind + "'");
}

std::string resolve_output_dir(const std::string& cli_out, const json& config) {
  if (!cli_out.empty()) return cli_out;
  if (const char* env = std::getenv(kOutputEnv); env && *env) return env;
  if (config.contains("output")) return config.at("output").get<std::string>();
  return "out";
}

void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < jobs; ++w)
    pool.emplace_back([&]() {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

RunResult run_experiment(const json& config, const RunOptions& options, const std::string& config_text) {
  RunResult result;
  auto start = std::chrono::steady_clock::now();
  try {
    result.out_dir = resolve_output_dir(options.out_dir, config);
    std::filesystem::create_directories(result.out_dir);
  } catch (const std::exception& e) {
    result.exit_code = exit_invalid;
    result.message = e.what();
    return result;
  }
  Run run(config, options, result);
  try {
    std::string kind = require(config, "kind").get<std::string>();
    if (kind == "verify")
      run_verify(run);
    else if (kind == "solve-young")
      run_solve(run, true);
    else if (kind == "solve-rough")
      run_solve(run, false);
    else if (kind == "convergence")
      run_convergence(run);
    else if (kind == "ensemble")
      run_ensemble(run);
    else if (kind == "covariance-check")
      run_covariance(run);
    else
      throw InvalidInput("unknown experiment kind '" + kind + "'");
    bool all = std::all_of(result.checks.begin(), result.checks.end(), [](const CheckResult& c) { return c.passed; });
    result.exit_code = all ? exit_ok : exit_check_failed;
  } catch (const InvalidInput& e) {
    result.exit_code = exit_invalid;
    result.message = e.what();
  } catch (const QuadratureFailure& e) {
    result.exit_code = exit_invalid;
    result.message = e.what();
  } catch (const json::exception& e) {
    result.exit_code = exit_invalid;
    result.message = e.what();
  } catch (const Error& e) {
    result.exit_code = exit_solver_failed;
    result.message = e.what();
  }
  std::sort(result.checks.begin(), result.checks.end(),
            [](const CheckResult& a, const CheckResult& b) { return a.name < b.name; });
  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_manifest(config, result, config_text, seconds);
  return result;
}

RunResult run_config_file(const std::string& path, const RunOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    RunResult r;
    r.exit_code = exit_invalid;
    r.message = "cannot open config '" + path + "'";
    return r;
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string text = buffer.str();
  json config;
  try {
    config = json::parse(text);
  } catch (const json::parse_error& e) {
    RunResult r;
    r.exit_code = exit_invalid;
    r.message = std::string("config parse error: ") + e.what();
    return r;
  }
  if (!config.is_object()) {
    RunResult r;
    r.exit_code = exit_invalid;
    r.message = "config must be a JSON object";
    return r;
  }
  return run_experiment(config, options, text);
}

}  // namespace convrough
