#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <random>

#include "convrough/expint.hpp"

using namespace convrough;

TEST_CASE("exp_int examples") {
  CHECK(exp_int(0.0, 0.0, 1.0) == doctest::Approx(1.0));
  CHECK(exp_int(1.0, 2.0, 1.0) == doctest::Approx(std::exp(-1.0) - std::exp(-2.0)).epsilon(1e-14));
  CHECK(exp_int(1.0, 1.0 + 1e-9, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-8));
}

TEST_CASE("property: exp_int matches adaptive quadrature") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 20.0), d(1e-6, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    double lambda = u(rng), mu = trial % 5 == 0 ? lambda * (1.0 + 1e-9) : u(rng), delta = d(rng);
    double q = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        [&](double r) { return std::exp(-lambda * (delta - r) - mu * r); }, 0.0, delta, 10, 1e-14);
    CHECK(exp_int(lambda, mu, delta) == doctest::Approx(q).epsilon(1e-11));
  }
}

TEST_CASE("iterated integrals against nested quadrature") {
  using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
  std::vector<std::vector<double>> cases{{1.0, 2.0, 0.0}, {0.0, 0.0, 0.0}, {3.0, 3.0, 3.0}, {5.0, 1e-8, 0.0}};
  for (const auto& z : cases) {
    for (double delta : {1e-3, 0.3, 1.5}) {
      // I(z0, z1, z2; D) = int_0^D e^{-z0 (D - r1)} int_0^r1 e^{-z1 (r1 - r2)} e^{-z2 r2} dr2 dr1
      double q = GK::integrate(
          [&](double r1) {
            return std::exp(-z[0] * (delta - r1)) *
                   GK::integrate([&](double r2) { return std::exp(-z[1] * (r1 - r2) - z[2] * r2); }, 0.0, r1, 8, 1e-14);
          },
          0.0, delta, 8, 1e-14);
      CHECK(iterated_exp_int(z, delta) == doctest::Approx(q).epsilon(1e-10));
      Eigen::MatrixXd m = iterated_exp_int_matrix(z, delta);
      CHECK(m(0, 2) == doctest::Approx(q).epsilon(1e-10));
      CHECK(m(1, 2) == doctest::Approx(exp_int(z[1], z[2], delta)).epsilon(1e-12));
      CHECK(m(0, 0) == doctest::Approx(std::exp(-z[0] * delta)).epsilon(1e-14));
    }
  }
  CHECK(iterated_exp_int({0.0, 0.0, 0.0}, 2.0) == doctest::Approx(2.0));
}
