#include "convrough/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "convrough/errors.hpp"

namespace convrough {

TimeGrid::TimeGrid(std::vector<double> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw InvalidInput("time grid needs at least two points");
  if (points_.front() != 0.0) throw InvalidInput("time grid must start at 0");
  for (std::size_t i = 1; i < points_.size(); ++i) {
    if (!std::isfinite(points_[i]) || !(points_[i] > points_[i - 1]))
      throw InvalidInput("time grid must be strictly increasing and finite");
  }
}

TimeGrid TimeGrid::uniform(std::size_t cells, double horizon) {
  if (cells == 0) throw InvalidInput("uniform grid needs at least one cell");
  if (!(horizon > 0.0)) throw InvalidInput("horizon must be positive");
  std::vector<double> pts(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i) pts[i] = horizon * static_cast<double>(i) / static_cast<double>(cells);
  pts.back() = horizon;
  return TimeGrid(std::move(pts));
}

std::size_t TimeGrid::index_of(double t) const noexcept {
  auto it = std::lower_bound(points_.begin(), points_.end(), t);
  if (it == points_.end() || *it != t) return npos;
  return static_cast<std::size_t>(it - points_.begin());
}

std::size_t TimeGrid::cell_of(double t) const {
  if (t < 0.0 || t > horizon()) throw InvalidInput("time outside the grid horizon");
  auto it = std::upper_bound(points_.begin(), points_.end(), t);
  std::size_t c = static_cast<std::size_t>(it - points_.begin());
  if (c == 0) return 0;
  return std::min(c - 1, cells() - 1);
}

TimeGrid TimeGrid::subsample(std::size_t stride) const {
  if (stride == 0 || cells() % stride != 0) throw InvalidInput("stride must divide the number of cells");
  std::vector<double> pts;
  pts.reserve(cells() / stride + 1);
  for (std::size_t i = 0; i < points_.size(); i += stride) pts.push_back(points_[i]);
  return TimeGrid(std::move(pts));
}

std::uint64_t TimeGrid::fingerprint() const noexcept {
  std::uint64_t h = 1469598103934665603ULL;
  for (double p : points_) {
    std::uint64_t bits;
    std::memcpy(&bits, &p, sizeof bits);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffU;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

}  // namespace convrough
