#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace convrough {

// Strictly increasing sample times on [0, T].
class TimeGrid {
 public:
  TimeGrid() = default;
  explicit TimeGrid(std::vector<double> points);

  static TimeGrid uniform(std::size_t cells, double horizon = 1.0);

  std::size_t size() const noexcept { return points_.size(); }
  std::size_t cells() const noexcept { return points_.size() - 1; }
  double operator[](std::size_t i) const { return points_[i]; }
  double horizon() const noexcept { return points_.back(); }
  const std::vector<double>& points() const noexcept { return points_; }

  // Index of an exact grid time, or npos.
  std::size_t index_of(double t) const noexcept;
  // Cell c with points[c] <= t < points[c+1]; the last cell for t == T.
  std::size_t cell_of(double t) const;
  // Every `stride`-th point; stride must divide cells().
  TimeGrid subsample(std::size_t stride) const;
  std::uint64_t fingerprint() const noexcept;

  bool operator==(const TimeGrid& other) const noexcept { return points_ == other.points_; }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<double> points_;
};

}  // namespace convrough
