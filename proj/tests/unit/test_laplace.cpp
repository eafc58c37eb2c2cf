#include <doctest.h>

#include <cmath>
#include <random>

#include "convrough/errors.hpp"
#include "convrough/laplace.hpp"

using namespace convrough;

TEST_CASE("measure validation") {
  CHECK_THROWS_AS(KernelMeasure({{-1.0, 1.0}}), InvalidInput);
  CHECK_THROWS_AS(KernelMeasure({{1.0, 1.0}, {1.0, 2.0}}), InvalidInput);
  CHECK_THROWS_AS(KernelMeasure({{std::nan(""), 1.0}}), InvalidInput);
  KernelMeasure m({{3.0, 1.0}, {1.0, 2.0}});
  CHECK(m.xi(0) == 1.0);
  CHECK(m.weight(0) == 2.0);
}

TEST_CASE("phi_eval examples") {
  KernelMeasure one({{1.0, 1.0}});
  CHECK(phi_eval(one, 0.0) == 1.0);
  CHECK(phi_eval(one, 1.0) == doctest::Approx(std::exp(-1.0)));
  KernelMeasure flat({{0.0, 1.0}});
  for (double v : {0.0, 0.5, 10.0}) CHECK(phi_eval(flat, v) == 1.0);
}

TEST_CASE("moment_check examples") {
  CHECK(moment_check(KernelMeasure({{1.0, 1.0}}), 2.0) == doctest::Approx(2.0));
  CHECK(moment_check(KernelMeasure({{1.0, 0.0}, {5.0, 0.0}}), 1.0) == 0.0);
  CHECK(moment_check(KernelMeasure({{2.0, 0.5}, {4.0, -0.5}}), 1.0) == doctest::Approx(4.0));
}

TEST_CASE("project examples") {
  KernelMeasure two({{1.0, 2.0}, {3.0, -1.0}});
  CHECK(project({Value::Zero(1, 2), Value::Zero(1, 2)}, two).norm() == 0.0);
  KernelMeasure one({{0.7, 1.0}});
  Value v = Value::Constant(2, 1, 3.5);
  CHECK(project({v}, one) == v);
  CHECK(project({Value::Constant(1, 1, 1.0), Value::Constant(1, 1, 4.0)}, two)(0, 0) == doctest::Approx(-2.0));
}

TEST_CASE("build_quadrature examples") {
  QuadratureOptions opt;
  opt.n_nodes = 64;
  opt.tail_cut = 40.0;
  KernelMeasure e = build_quadrature(make_density("exp", {}), opt);
  CHECK(e.provenance() == Provenance::quadrature);
  CHECK(std::abs(phi_eval(e, 1.0) - 0.5) < 1e-8);
  KernelMeasure g = build_quadrature(make_density("gamma", {{"shape", 2.0}}), opt);
  CHECK(std::abs(phi_eval(g, 1.0) - 0.25) < 1e-8);

  Density point = make_density("point", {{"xi", 2.0}, {"weight", 0.5}});
  CHECK(point.point_mass);
  REQUIRE(point.atoms.size() == 1);
  CHECK(point.atoms[0].xi == 2.0);

  opt.n_nodes = 4;
  opt.tolerance = 1e-14;
  CHECK_THROWS_AS(build_quadrature(make_density("exp", {}), opt), QuadratureFailure);
}

TEST_CASE("property: quadrature reconstruction within the declared tolerance") {
  for (auto [name, params] : std::vector<std::pair<std::string, std::map<std::string, double>>>{
           {"exp", {{"rate", 2.0}}}, {"exp", {{"scale", 3.0}}}, {"gamma", {{"shape", 2.0}}}, {"gamma", {{"shape", 3.0}, {"rate", 0.5}}}}) {
    Density d = make_density(name, params);
    QuadratureOptions opt;
    opt.n_nodes = 64;
    opt.tolerance = 1e-8;
    QuadratureReport report;
    KernelMeasure m = build_quadrature(d, opt, &report);
    CHECK(report.achieved <= 1e-8);
    for (double v : opt.validation) CHECK(std::abs(phi_eval(m, v) - d.phi_exact(v)) <= 1e-8);
  }
}

TEST_CASE("property: phi is completely monotone for nonnegative weights") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Atom> atoms;
    for (int k = 0; k < 4; ++k) atoms.push_back({u(rng) + 5.0 * k, u(rng)});
    KernelMeasure m(atoms);
    double prev = phi_eval(m, 0.0);
    for (double v = 0.1; v < 10.0; v += 0.1) {
      double cur = phi_eval(m, v);
      CHECK(cur <= prev);
      CHECK(cur >= 0.0);
      prev = cur;
    }
  }
}

TEST_CASE("property: project is linear") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n;
  KernelMeasure m({{0.5, 1.5}, {2.0, -0.3}, {7.0, 0.8}});
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Value> g, h, c;
    double alpha = n(rng);
    for (int k = 0; k < 3; ++k) {
      g.push_back(Value::NullaryExpr(2, 2, [&]() { return n(rng); }));
      h.push_back(Value::NullaryExpr(2, 2, [&]() { return n(rng); }));
      c.push_back(alpha * g.back() + h.back());
    }
    CHECK((project(c, m) - alpha * project(g, m) - project(h, m)).cwiseAbs().maxCoeff() < 1e-14 * 10);
  }
}

TEST_CASE("gauss_legendre integrates polynomials exactly") {
  std::vector<double> x, w;
  gauss_legendre(8, x, w);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(x[i], 14);
  CHECK(s == doctest::Approx(2.0 / 15.0).epsilon(1e-14));
}
