#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <cstring>
#include <filesystem>

#include "convrough/driver.hpp"
#include "convrough/errors.hpp"

using namespace convrough;

namespace {

std::shared_ptr<const TimeGrid> uniform(std::size_t cells, double horizon = 1.0) {
  return std::make_shared<TimeGrid>(TimeGrid::uniform(cells, horizon));
}

}  // namespace

TEST_CASE("fBm sampler: Brownian case has uncorrelated increments") {
  DriverPath x = sample_fbm(0.5, uniform(1024), 1, 3);
  Eigen::VectorXd inc = x.values().col(0).tail(1024) - x.values().col(0).head(1024);
  double m = inc.mean();
  Eigen::VectorXd c = inc.array() - m;
  double rho = c.head(1023).dot(c.tail(1023)) / c.squaredNorm();
  CHECK(std::abs(rho) < 0.05);
}

TEST_CASE("fBm sampler: variance at t = 1") {
  auto g = uniform(16);
  const int n = 10000;
  std::vector<double> sq(n);
  for (int i = 0; i < n; ++i) {
    double v = sample_fbm(0.7, g, 1, static_cast<std::uint64_t>(i)).values()(16, 0);
    sq[static_cast<std::size_t>(i)] = v * v;
  }
  double mean = 0.0;
  for (double v : sq) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : sq) var += (v - mean) * (v - mean);
  double se = std::sqrt(var / (n - 1.0) / n);
  CHECK(std::abs(mean - fbm_covariance(0.7, 1.0, 1.0)) < 3.0 * se);
  CHECK(fbm_covariance(0.7, 1.0, 1.0) == 1.0);
}

TEST_CASE("fBm sampler: determinism and independent dimensions") {
  auto g = uniform(64);
  DriverPath a = sample_fbm(0.4, g, 2, 99), b = sample_fbm(0.4, g, 2, 99), c = sample_fbm(0.4, g, 2, 100);
  CHECK(std::memcmp(a.values().data(), b.values().data(), sizeof(double) * 65 * 2) == 0);
  CHECK((a.values() - c.values()).norm() > 0.0);
  CHECK((a.values().col(0) - a.values().col(1)).norm() > 0.0);
  CHECK(a.values().row(0).norm() == 0.0);
  CHECK(derive_seed(5, 0) != derive_seed(5, 1));
  CHECK(derive_seed(5, 0) != derive_seed(6, 0));
}

TEST_CASE("fBm sampler validation") {
  CHECK_THROWS_AS(sample_fbm(1.0, uniform(8), 1, 0), InvalidInput);
  CHECK_THROWS_AS(sample_fbm(0.0, uniform(8), 1, 0), InvalidInput);
  CHECK_THROWS_AS(sample_fbm(0.5, uniform(kCholeskyCap + 1), 1, 0), InvalidInput);
  CHECK_THROWS_AS(sample_fbm(0.5, uniform(8), 0, 0), InvalidInput);
}

TEST_CASE("Brownian sampler increments have variance dt") {
  auto g = uniform(4096, 2.0);
  DriverPath x = sample_brownian(g, 1, 4);
  Eigen::VectorXd inc = x.values().col(0).tail(4096) - x.values().col(0).head(4096);
  CHECK(inc.squaredNorm() / 4096.0 == doctest::Approx(2.0 / 4096.0).epsilon(0.1));
}

TEST_CASE("piecewise-linear evaluation, slopes and subsampling") {
  auto g = std::make_shared<TimeGrid>(std::vector<double>{0.0, 0.5, 2.0});
  Eigen::MatrixXd v(3, 2);
  v << 0, 0, 1, -1, 4, 2;
  DriverPath x(g, v);
  CHECK(x(0.25)(0) == doctest::Approx(0.5));
  CHECK(x(1.25)(1) == doctest::Approx(0.5));
  CHECK(x.slope(1)(0) == doctest::Approx(2.0));
  CHECK(x.scaled(3.0).values()(2, 1) == 6.0);
  DriverPath y = sample_fbm(0.4, uniform(8), 1, 1);
  DriverPath z = y.subsample(4);
  CHECK(z.grid().size() == 3);
  CHECK(z.values()(1, 0) == y.values()(4, 0));
}

TEST_CASE("smooth drivers and their closed-form twisted increments") {
  Eigen::RowVectorXd c(2);
  c << 1.0, -2.0;
  for (std::string name : {"linear", "sin", "zero"}) {
    SmoothFunction f = smooth_function(name, c);
    for (double xi : {0.0, 1.0, 5.0})
      for (auto [s, t] : {std::pair{0.0, 1.0}, std::pair{0.3, 0.7}}) {
        Eigen::RowVectorXd closed = f.x1_tilde(xi, s, t);
        for (Eigen::Index i = 0; i < 2; ++i) {
          double q = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
              [&](double v) { return std::exp(-xi * (t - v)) * f.derivative(v)(i); }, s, t, 8, 1e-15);
          CHECK(closed(i) == doctest::Approx(q).epsilon(1e-12).scale(1.0));
        }
      }
  }
  CHECK_THROWS_AS(smooth_function("cubic", c), InvalidInput);
  DriverPath x = sample_deterministic(smooth_function("sin", c), uniform(10));
  CHECK(x.values()(10, 1) == doctest::Approx(-2.0 * std::sin(1.0)));
}

TEST_CASE("driver CSV round trip") {
  auto dir = std::filesystem::temp_directory_path() / "convrough_driver_test";
  std::filesystem::create_directories(dir);
  auto file = (dir / "x.csv").string();
  DriverPath x = sample_fbm(0.3, uniform(33), 3, 12);
  write_driver_csv(x, file);
  DriverPath y = read_driver_csv(file);
  CHECK(y.grid() == x.grid());
  CHECK(std::memcmp(x.values().data(), y.values().data(), sizeof(double) * 34 * 3) == 0);
  CHECK_THROWS_AS(read_driver_csv((dir / "missing.csv").string()), InvalidInput);
}
