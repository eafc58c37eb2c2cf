#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "convrough/errors.hpp"
#include "convrough/kernels.hpp"

using namespace convrough;

namespace {

std::vector<const kernels::Table*> variants() {
  std::vector<const kernels::Table*> v;
  if (const auto* t = kernels::avx2_table()) v.push_back(t);
  if (const auto* t = kernels::neon_table()) v.push_back(t);
  return v;
}

std::vector<double> draw(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("scalar table reference values") {
  const auto& s = kernels::scalar_table();
  std::vector<double> state{1.0, 2.0}, decay{0.5, 0.25}, add{1.0, -1.0};
  s.twisted_update(state.data(), decay.data(), add.data(), 2);
  CHECK(state[0] == 1.5);
  CHECK(state[1] == -0.5);
  std::vector<double> num{1.0, 6.0, 3.0}, den{1.0, 2.0, 1.0};
  CHECK(s.max_ratio(num.data(), den.data(), 3) == 3.0);
  CHECK(s.max_ratio(num.data(), den.data(), 0) == 0.0);
  CHECK(kernels::first_ratio_index(num.data(), den.data(), 3, 3.0) == 1);
  CHECK(s.dot(num.data(), den.data(), 3) == 16.0);
  std::vector<double> v{-1.0, 2.0, -3.0};
  CHECK(s.weighted_abs_sum(num.data(), v.data(), 3) == 22.0);
}

TEST_CASE("vector variants match the scalar reference") {
  const auto& ref = kernels::scalar_table();
  std::mt19937_64 rng(2024);
  for (const auto* t : variants()) {
    CAPTURE(t->name);
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 17u, 64u, 1023u}) {
      auto state = draw(rng, n, -2.0, 2.0), decay = draw(rng, n, 0.0, 1.0), add = draw(rng, n, -1.0, 1.0);
      auto s1 = state, s2 = state;
      ref.twisted_update(s1.data(), decay.data(), add.data(), n);
      t->twisted_update(s2.data(), decay.data(), add.data(), n);
      CHECK(std::memcmp(s1.data(), s2.data(), n * sizeof(double)) == 0);

      auto num = draw(rng, n, 0.0, 5.0), den = draw(rng, n, 0.1, 2.0);
      double a = ref.max_ratio(num.data(), den.data(), n), b = t->max_ratio(num.data(), den.data(), n);
      CHECK(std::memcmp(&a, &b, sizeof a) == 0);

      double scale = 0.0;
      for (std::size_t i = 0; i < n; ++i) scale += std::abs(state[i] * add[i]);
      CHECK(std::abs(ref.dot(state.data(), add.data(), n) - t->dot(state.data(), add.data(), n)) <=
            1e-14 * (scale + 1.0));
      double w = ref.weighted_abs_sum(num.data(), state.data(), n);
      CHECK(std::abs(w - t->weighted_abs_sum(num.data(), state.data(), n)) <= 1e-14 * (w + 1.0));
    }
  }
}

TEST_CASE("table selection") {
  CHECK(std::string(kernels::active().name).size() > 0);
  kernels::select("scalar");
  CHECK(std::string(kernels::active().name) == "scalar");
  if (kernels::avx2_table()) {
    kernels::select("avx2");
    CHECK(std::string(kernels::active().name) == "avx2");
  } else {
    CHECK_THROWS_AS(kernels::select("avx2"), InvalidInput);
  }
  CHECK_THROWS_AS(kernels::select("sse9"), InvalidInput);
}
