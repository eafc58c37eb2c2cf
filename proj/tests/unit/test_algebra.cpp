#include <doctest.h>

#include <cmath>

#include "convrough/errors.hpp"
#include "convrough/increments.hpp"
#include "support/random.hpp"

using namespace convrough;
using namespace support;

namespace {

GridPtr grid_of(std::vector<double> p) { return std::make_shared<TimeGrid>(std::move(p)); }

Value scalar(double v) { return Value::Constant(1, 1, v); }

Increment1 scalar_path(GridPtr g, double (*f)(double)) {
  return Increment1::from_function(g, [f](double t) { return scalar(f(t)); });
}

}  // namespace

TEST_CASE("time grid validation") {
  CHECK_THROWS_AS(TimeGrid({0.0}), InvalidInput);
  CHECK_THROWS_AS(TimeGrid({0.1, 1.0}), InvalidInput);
  CHECK_THROWS_AS(TimeGrid({0.0, 1.0, 1.0}), InvalidInput);
  TimeGrid g = TimeGrid::uniform(4, 2.0);
  CHECK(g.size() == 5);
  CHECK(g.horizon() == 2.0);
  CHECK(g.index_of(1.0) == 2);
  CHECK(g.index_of(0.7) == TimeGrid::npos);
  CHECK(g.cell_of(2.0) == 3);
  CHECK(g.subsample(2).size() == 3);
}

TEST_CASE("delta1 examples") {
  auto g = grid_of({0.0, 0.5, 1.0, 1.5});
  auto lin = delta1(scalar_path(g, [](double t) { return t; }));
  CHECK(lin(2, 0)(0, 0) == doctest::Approx(1.0));
  auto cst = delta1(scalar_path(g, [](double) { return 3.0; }));
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t s = 0; s <= t; ++s) CHECK(cst(t, s)(0, 0) == 0.0);
  auto sq = delta1(scalar_path(g, [](double t) { return t * t; }));
  CHECK(sq(3, 1)(0, 0) == doctest::Approx(1.5 * 1.5 - 0.5 * 0.5));
}

TEST_CASE("delta2 examples") {
  auto g = grid_of({0.0, 1.0, 2.0});
  Increment2 h(g, {1, 1}, [](double t, double s) { return scalar((t - s) * (t - s)); });
  CHECK(delta2(h)(2, 1, 0)(0, 0) == doctest::Approx(2.0));
  Increment2 add(g, {1, 1}, [](double t, double s) { return scalar(t - s); });
  CHECK(std::abs(delta2(add)(2, 1, 0)(0, 0)) < 1e-15);
}

TEST_CASE("twist examples") {
  CHECK(twist(0.0, 0.3, 1.7) == 0.0);
  CHECK(twist(2.0, 0.4, 0.4) == 0.0);
  CHECK(twist(1.0, 0.0, 1.0) == doctest::Approx(std::exp(-1.0) - 1.0));
}

TEST_CASE("delta_tilde examples") {
  std::mt19937_64 rng(11);
  auto g = random_grid(rng, 6);
  auto zero = std::make_shared<KernelMeasure>(std::vector<Atom>{{0.0, 1.0}});
  std::vector<Value> vals;
  for (std::size_t i = 0; i < g->size(); ++i) vals.push_back(random_value(rng, 2, 1));
  LaplaceIncrement1 lg(g, zero, {vals});
  Increment2 plain = delta1(Increment1(g, vals));
  LaplaceIncrement2 twisted = delta_tilde(lg);
  for (std::size_t t = 0; t < g->size(); ++t)
    for (std::size_t s = 0; s <= t; ++s) CHECK((twisted(0, t, s) - plain(t, s)).norm() == 0.0);

  auto m = std::make_shared<KernelMeasure>(std::vector<Atom>{{0.5, 1.0}, {3.0, 1.0}});
  auto decay = LaplaceIncrement1::from_function(g, m, [&](std::size_t k, double t) {
    return scalar(std::exp(-m->xi(k) * t));
  });
  LaplaceIncrement2 d = delta_tilde(decay);
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t t = 0; t < g->size(); ++t)
      for (std::size_t s = 0; s <= t; ++s) CHECK(std::abs(d(k, t, s)(0, 0)) < 1e-15);
}

TEST_CASE("delta_double_tilde reduces to delta and delta_tilde") {
  std::mt19937_64 rng(3);
  auto g = random_grid(rng, 5);
  auto zero = std::make_shared<KernelMeasure>(std::vector<Atom>{{0.0, 1.0}});
  auto f = [](double t, double s) { return scalar(std::sin(3.0 * t) * std::cos(s) + t * t * s); };
  DoubleLaplaceIncrement2 r(g, zero, zero, {1, 1}, [&](std::size_t, std::size_t, double t, double s) { return f(t, s); });
  Increment3 plain = delta2(Increment2(g, {1, 1}, f));
  auto m = std::make_shared<KernelMeasure>(std::vector<Atom>{{1.3, 1.0}});
  DoubleLaplaceIncrement2 rx(g, m, zero, {1, 1}, [&](std::size_t, std::size_t, double t, double s) { return f(t, s); });
  LaplaceIncrement3 tilde = delta_tilde(LaplaceIncrement2(g, m, {1, 1}, [&](std::size_t, double t, double s) {
    return f(t, s);
  }));
  DoubleLaplaceIncrement3 dr = delta_double_tilde(r), drx = delta_double_tilde(rx);
  for (std::size_t s = 0; s < g->size(); ++s)
    for (std::size_t u = s; u < g->size(); ++u)
      for (std::size_t t = u; t < g->size(); ++t) {
        CHECK(dr(0, 0, t, u, s)(0, 0) == doctest::Approx(plain(t, u, s)(0, 0)).epsilon(1e-13));
        CHECK(drx(0, 0, t, u, s)(0, 0) == doctest::Approx(tilde(0, t, u, s)(0, 0)).epsilon(1e-13));
      }
}

TEST_CASE("trace_pair examples") {
  Eigen::MatrixXd i2 = Eigen::MatrixXd::Identity(2, 2);
  CHECK(trace_pair(i2, i2) == 2.0);
  Eigen::MatrixXd a(2, 2), b(2, 2);
  a << 1, 2, 3, 4;
  b << 0, 1, 1, 0;
  CHECK(trace_pair(a, b) == 5.0);
  CHECK(trace_pair(a, b) == trace_pair(b, a));
}

TEST_CASE("holder_norm2 examples") {
  auto g = grid_of({0.0, 0.25, 1.0});
  Increment2 zero(g, {1, 1}, [](double, double) { return scalar(0.0); });
  CHECK(holder_norm2(zero, 0.5).value == 0.0);
  Increment2 lin(g, {1, 1}, [](double t, double s) { return scalar(t - s); });
  CHECK(holder_norm2(lin, 1.0).value == doctest::Approx(1.0));
  Increment2 sq(g, {1, 1}, [](double t, double s) { return scalar(std::sqrt(t - s)); });
  HolderNorm2 h = holder_norm2(sq, 0.4);
  CHECK(h.value == doctest::Approx(1.0));
  CHECK(h.t == 2);
  CHECK(h.s == 0);
}

TEST_CASE("holder_norm3 examples and exhaustive enumeration") {
  auto g = grid_of({0.0, 0.3, 0.5, 1.0});
  Increment3 zero(g, {1, 1}, [](double, double, double) { return scalar(0.0); });
  CHECK(holder_norm3(zero, 1.0, 1.0).value == 0.0);
  Increment3 prod(g, {1, 1}, [](double t, double u, double s) { return scalar((u - s) * (t - u)); });
  CHECK(holder_norm3(prod, 1.0, 1.0).value == doctest::Approx(1.0));

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto rg = random_grid(rng, 3 + static_cast<std::size_t>(trial % 4));
    std::normal_distribution<double> n;
    double c1 = n(rng), c2 = n(rng);
    Increment3 h(rg, {1, 2}, [=](double t, double u, double s) {
      Value v(1, 2);
      v << std::sin(c1 * t + u) * (u - s), c2 * std::cos(s + t) * (t - u);
      return v;
    });
    double brute = 0.0;
    for (std::size_t s = 0; s < rg->size(); ++s)
      for (std::size_t u = s + 1; u < rg->size(); ++u)
        for (std::size_t t = u + 1; t < rg->size(); ++t)
          brute = std::max(brute, h(t, u, s).norm() /
                                      (std::pow((*rg)[u] - (*rg)[s], 0.7) * std::pow((*rg)[t] - (*rg)[u], 0.4)));
    CHECK(holder_norm3(h, 0.7, 0.4).value == doctest::Approx(brute).epsilon(1e-14));
  }
}

TEST_CASE("lbeta_norm examples") {
  KernelMeasure zero({{0.0, 1.0}});
  CHECK(lbeta_norm({Value::Zero(1, 2)}, zero, 1.0) == 0.0);
  Value v(1, 2);
  v << 3.0, 4.0;
  CHECK(lbeta_norm({v}, zero, 1.0) == doctest::Approx(5.0));
  KernelMeasure two({{1.0, 0.5}, {2.0, 0.5}});
  CHECK(lbeta_norm({scalar(1.0), scalar(1.0)}, two, 1.0) == doctest::Approx(2.5));
}

TEST_CASE("estimate_holder_exponent of a smooth path") {
  auto g = std::make_shared<TimeGrid>(TimeGrid::uniform(4095));
  HolderEstimate e = estimate_holder_exponent(scalar_path(g, [](double t) { return t; }));
  CHECK(e.exponent == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("property: delta of delta vanishes on random data") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 30; ++trial) {
    auto g = random_grid(rng, 9);
    std::vector<Value> v;
    for (std::size_t i = 0; i < g->size(); ++i) v.push_back(random_value(rng, 2, 3));
    Increment3 h = delta2(delta1(Increment1(g, v)));
    auto m = random_measure(rng, 3);
    std::vector<std::vector<Value>> lv(3);
    for (auto& row : lv)
      for (std::size_t i = 0; i < g->size(); ++i) row.push_back(random_value(rng, 1, 2));
    LaplaceIncrement3 lh = delta_tilde(delta_tilde(LaplaceIncrement1(g, m, lv)));
    double worst = 0.0;
    for (std::size_t s = 0; s < g->size(); ++s)
      for (std::size_t u = s; u < g->size(); ++u)
        for (std::size_t t = u; t < g->size(); ++t) {
          worst = std::max(worst, h(t, u, s).cwiseAbs().maxCoeff());
          for (std::size_t k = 0; k < 3; ++k) worst = std::max(worst, lh(k, t, u, s).cwiseAbs().maxCoeff());
        }
    CHECK(worst < 1e-12 * 10.0);
  }
}

TEST_CASE("property: delta of the twist is the product of twists") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    double xi = u(rng), a = u(rng), b = u(rng), c = u(rng);
    double s = std::min({a, b, c}), t = std::max({a, b, c}), m = a + b + c - s - t;
    double lhs = twist(xi, s, t) - twist(xi, m, t) - twist(xi, s, m);
    CHECK(std::abs(lhs - twist(xi, m, t) * twist(xi, s, m)) < 1e-12);
  }
}

TEST_CASE("property: Leibniz rules") {
  std::mt19937_64 rng(17);
  auto g = random_grid(rng, 7);
  std::vector<Value> gv, hv;
  for (std::size_t i = 0; i < g->size(); ++i) {
    gv.push_back(random_value(rng, 2, 3));
    hv.push_back(random_value(rng, 3, 2));
  }
  Increment1 gi(g, gv), hi(g, hv);
  Increment2 lhs = delta1(product(gi, hi));
  Increment2 a = product(delta1(gi), hi), b = product(gi, delta1(hi));
  for (std::size_t t = 0; t < g->size(); ++t)
    for (std::size_t s = 0; s <= t; ++s) CHECK((lhs(t, s) - a(t, s) - b(t, s)).norm() < 1e-12);

  auto m = random_measure(rng, 2);
  LaplaceIncrement2 mt(g, m, {1, 2}, [&](std::size_t k, double t, double s) {
    Value v(1, 2);
    v << std::sin(t + static_cast<double>(k)) * s, std::exp(-t) + s * s;
    return v;
  });
  Increment1 l = Increment1::from_function(g, [](double t) {
    Value v(2, 2);
    v << t, t * t, std::cos(t), 1.0 + std::sin(t);
    return v;
  });
  LaplaceIncrement3 left = delta_tilde(product(mt, l));
  LaplaceIncrement3 r1 = product(delta_tilde(mt), l);
  LaplaceIncrement3 r2 = product(mt, delta1(l));
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t s = 0; s < g->size(); ++s)
      for (std::size_t u = s; u < g->size(); ++u)
        for (std::size_t t = u; t < g->size(); ++t)
          CHECK((left(k, t, u, s) - r1(k, t, u, s) + r2(k, t, u, s)).norm() < 1e-12);
}
