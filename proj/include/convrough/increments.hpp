#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "convrough/grid.hpp"
#include "convrough/laplace.hpp"

namespace convrough {

using GridPtr = std::shared_ptr<const TimeGrid>;

struct Shape {
  Eigen::Index rows = 1;
  Eigen::Index cols = 1;
  bool operator==(const Shape& o) const noexcept { return rows == o.rows && cols == o.cols; }
};

inline Shape shape_of(const Value& v) { return {v.rows(), v.cols()}; }

namespace detail {

// Thread-safe memo keyed by packed grid indices; writes are idempotent.
class Memo {
 public:
  bool find(std::uint64_t key, Value& out) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = values_.find(key);
    if (it == values_.end()) return false;
    out = it->second;
    return true;
  }
  void insert(std::uint64_t key, const Value& v) {
    std::lock_guard<std::mutex> lock(mutex_);
    values_.emplace(key, v);
  }
  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return values_.size();
  }

 private:
  mutable std::mutex mutex_;
  std::unordered_map<std::uint64_t, Value> values_;
};

}  // namespace detail

class Increment1 {
 public:
  Increment1(GridPtr grid, std::vector<Value> values);
  static Increment1 from_function(GridPtr grid, const std::function<Value(double)>& f);

  const TimeGrid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  Shape shape() const noexcept { return shape_; }
  const Value& operator()(std::size_t i) const { return values_[i]; }
  // Value at an exact grid time.
  const Value& at(double t) const;

 private:
  GridPtr grid_;
  Shape shape_;
  std::vector<Value> values_;
};

class Increment2 {
 public:
  using Fn = std::function<Value(double t, double s)>;
  Increment2(GridPtr grid, Shape shape, Fn fn);
  static Increment2 from_table(GridPtr grid, std::vector<std::vector<Value>> table);

  const TimeGrid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  Shape shape() const noexcept { return shape_; }
  // Memoized value on grid indices t >= s.
  Value operator()(std::size_t t, std::size_t s) const;
  // Direct evaluation at arbitrary times t >= s.
  Value at(double t, double s) const;

 private:
  GridPtr grid_;
  Shape shape_;
  Fn fn_;
  std::shared_ptr<detail::Memo> memo_;
};

class Increment3 {
 public:
  using Fn = std::function<Value(double t, double u, double s)>;
  Increment3(GridPtr grid, Shape shape, Fn fn);

  const TimeGrid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  Shape shape() const noexcept { return shape_; }
  Value operator()(std::size_t t, std::size_t u, std::size_t s) const;
  Value at(double t, double u, double s) const;

 private:
  GridPtr grid_;
  Shape shape_;
  Fn fn_;
};

class LaplaceIncrement1 {
 public:
  // values[k][i]: atom k, grid point i
  LaplaceIncrement1(GridPtr grid, MeasurePtr measure, std::vector<std::vector<Value>> values);
  static LaplaceIncrement1 from_function(GridPtr grid, MeasurePtr measure,
                                         const std::function<Value(std::size_t k, double t)>& f);

  const TimeGrid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  const KernelMeasure& measure() const noexcept { return *measure_; }
  const MeasurePtr& measure_ptr() const noexcept { return measure_; }
  Shape shape() const noexcept { return shape_; }
  const Value& operator()(std::size_t k, std::size_t i) const { return values_[k][i]; }
  const Value& at(std::size_t k, double t) const;

 private:
  GridPtr grid_;
  MeasurePtr measure_;
  Shape shape_;
  std::vector<std::vector<Value>> values_;
};

class LaplaceIncrement2 {
 public:
  using Fn = std::function<Value(std::size_t k, double t, double s)>;
  LaplaceIncrement2(GridPtr grid, MeasurePtr measure, Shape shape, Fn fn);

  const TimeGrid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  const KernelMeasure& measure() const noexcept { return *measure_; }
  const MeasurePtr& measure_ptr() const noexcept { return measure_; }
  Shape shape() const noexcept { return shape_; }
  Value operator()(std::size_t k, std::size_t t, std::size_t s) const;
  Value at(std::size_t k, double t, double s) const;

 private:
  GridPtr grid_;
  MeasurePtr measure_;
  Shape shape_;
  Fn fn_;
  std::shared_ptr<detail::Memo> memo_;
};

class LaplaceIncrement3 {
 public:
  using Fn = std::function<Value(std::size_t k, double t, double u, double s)>;
  LaplaceIncrement3(GridPtr grid, MeasurePtr measure, Shape shape, Fn fn);

  const TimeGrid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  const KernelMeasure& measure() const noexcept { return *measure_; }
  const MeasurePtr& measure_ptr() const noexcept { return measure_; }
  Shape shape() const noexcept { return shape_; }
  Value operator()(std::size_t k, std::size_t t, std::size_t u, std::size_t s) const;
  Value at(std::size_t k, double t, double u, double s) const;

 private:
  GridPtr grid_;
  MeasurePtr measure_;
  Shape shape_;
  Fn fn_;
};

// Values indexed by a pair of times and two atoms (xi from the first measure, eta from the second).
class DoubleLaplaceIncrement2 {
 public:
  using Fn = std::function<Value(std::size_t k, std::size_t l, double t, double s)>;
  DoubleLaplaceIncrement2(GridPtr grid, MeasurePtr xi_measure, MeasurePtr eta_measure, Shape shape, Fn fn);

  const TimeGrid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  const KernelMeasure& xi_measure() const noexcept { return *xi_; }
  const KernelMeasure& eta_measure() const noexcept { return *eta_; }
  const MeasurePtr& xi_measure_ptr() const noexcept { return xi_; }
  const MeasurePtr& eta_measure_ptr() const noexcept { return eta_; }
  Shape shape() const noexcept { return shape_; }
  Value at(std::size_t k, std::size_t l, double t, double s) const;
  Value operator()(std::size_t k, std::size_t l, std::size_t t, std::size_t s) const;

 private:
  GridPtr grid_;
  MeasurePtr xi_;
  MeasurePtr eta_;
  Shape shape_;
  Fn fn_;
};

class DoubleLaplaceIncrement3 {
 public:
  using Fn = std::function<Value(std::size_t k, std::size_t l, double t, double u, double s)>;
  DoubleLaplaceIncrement3(GridPtr grid, MeasurePtr xi_measure, MeasurePtr eta_measure, Shape shape, Fn fn);

  const TimeGrid& grid() const noexcept { return *grid_; }
  Shape shape() const noexcept { return shape_; }
  Value at(std::size_t k, std::size_t l, double t, double u, double s) const;
  Value operator()(std::size_t k, std::size_t l, std::size_t t, std::size_t u, std::size_t s) const;

 private:
  GridPtr grid_;
  MeasurePtr xi_;
  MeasurePtr eta_;
  Shape shape_;
  Fn fn_;
};

// a_ts(xi) = e^{-xi (t - s)} - 1
double twist(double xi, double s, double t);

Increment2 delta1(const Increment1& g);
Increment3 delta2(const Increment2& h);
LaplaceIncrement2 delta_tilde(const LaplaceIncrement1& g);
LaplaceIncrement3 delta_tilde(const LaplaceIncrement2& h);
DoubleLaplaceIncrement3 delta_double_tilde(const DoubleLaplaceIncrement2& r);

// Products following (gh)_{t1..tn..} = g_{t1..tn} h_{tn..}.
Increment1 product(const Increment1& g, const Increment1& h);
Increment2 product(const Increment1& g, const Increment2& h);
Increment2 product(const Increment2& h, const Increment1& g);
Increment3 product(const Increment2& g, const Increment2& h);
LaplaceIncrement2 product(const LaplaceIncrement2& m, const Increment1& l);
LaplaceIncrement3 product(const LaplaceIncrement2& m, const Increment2& l);
LaplaceIncrement3 product(const LaplaceIncrement3& m, const Increment1& l);

// Tr(A B^T)
double trace_pair(const Value& a, const Value& b);

struct HolderNorm2 {
  double value = 0.0;
  std::size_t t = 0;
  std::size_t s = 0;
};

struct HolderNorm3 {
  double value = 0.0;
  std::size_t t = 0;
  std::size_t u = 0;
  std::size_t s = 0;
};

HolderNorm2 holder_norm2(const Increment2& f, double mu);
HolderNorm2 holder_norm2(const LaplaceIncrement2& f, double mu, double beta);
HolderNorm3 holder_norm3(const Increment3& h, double gamma, double rho);
HolderNorm3 holder_norm3(const LaplaceIncrement3& h, double gamma, double rho, double beta);

double lbeta_norm(const std::vector<Value>& per_atom, const KernelMeasure& measure, double beta);

struct HolderEstimate {
  double exponent = 0.0;
  double residual = 0.0;
};

HolderEstimate estimate_holder_exponent(const Increment1& path);

}  // namespace convrough
