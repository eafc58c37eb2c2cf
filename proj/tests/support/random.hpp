#pragma once

#include <memory>
#include <random>
#include <vector>

#include "convrough/grid.hpp"
#include "convrough/laplace.hpp"

namespace support {

inline std::shared_ptr<convrough::TimeGrid> random_grid(std::mt19937_64& rng, std::size_t points) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> p{0.0};
  for (std::size_t i = 1; i < points; ++i) p.push_back(p.back() + u(rng));
  return std::make_shared<convrough::TimeGrid>(std::move(p));
}

inline convrough::Value random_value(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n;
  return convrough::Value::NullaryExpr(rows, cols, [&]() { return n(rng); });
}

inline std::shared_ptr<convrough::KernelMeasure> random_measure(std::mt19937_64& rng, std::size_t atoms) {
  std::uniform_real_distribution<double> u(0.0, 3.0);
  std::normal_distribution<double> n;
  std::vector<convrough::Atom> a;
  for (std::size_t k = 0; k < atoms; ++k) a.push_back({u(rng) + 3.0 * static_cast<double>(k), n(rng)});
  return std::make_shared<convrough::KernelMeasure>(a);
}

}  // namespace support
