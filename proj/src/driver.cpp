#include "convrough/driver.hpp"

#include <cmath>
#include <deque>
#include <map>
#include <mutex>
#include <random>

#include "convrough/csv.hpp"
#include "convrough/errors.hpp"
#include "convrough/expint.hpp"
#include "convrough/kernels.hpp"

namespace convrough {

const char* to_string(DriverKind kind) {
  switch (kind) {
    case DriverKind::deterministic:
      return "deterministic";
    case DriverKind::brownian:
      return "brownian";
    case DriverKind::fbm:
      return "fbm";
  }
  return "unknown";
}

DriverPath::DriverPath(std::shared_ptr<const TimeGrid> grid, Eigen::MatrixXd values, DriverKind kind, double hurst,
                       std::uint64_t seed)
    : grid_(std::move(grid)), values_(std::move(values)), kind_(kind), hurst_(hurst), seed_(seed) {
  if (!grid_) throw InvalidInput("driver needs a grid");
  if (values_.rows() != static_cast<Eigen::Index>(grid_->size())) throw InvalidInput("driver needs one row per grid point");
  if (values_.cols() < 1) throw InvalidInput("driver needs at least one dimension");
  if (!values_.allFinite()) throw InvalidInput("driver values must be finite");
  slopes_.resize(static_cast<Eigen::Index>(grid_->cells()), values_.cols());
  for (std::size_t c = 0; c < grid_->cells(); ++c) {
    auto i = static_cast<Eigen::Index>(c);
    slopes_.row(i) = (values_.row(i + 1) - values_.row(i)) / ((*grid_)[c + 1] - (*grid_)[c]);
  }
}

Eigen::RowVectorXd DriverPath::operator()(double t) const {
  std::size_t c = grid_->cell_of(t);
  auto i = static_cast<Eigen::Index>(c);
  if (t == (*grid_)[c + 1]) return values_.row(i + 1);
  return values_.row(i) + slopes_.row(i) * (t - (*grid_)[c]);
}

DriverPath DriverPath::scaled(double alpha) const { return DriverPath(grid_, alpha * values_, kind_, hurst_, seed_); }

DriverPath DriverPath::subsample(std::size_t stride) const {
  auto g = std::make_shared<const TimeGrid>(grid_->subsample(stride));
  Eigen::MatrixXd v(static_cast<Eigen::Index>(g->size()), values_.cols());
  for (std::size_t i = 0; i < g->size(); ++i) v.row(static_cast<Eigen::Index>(i)) = values_.row(static_cast<Eigen::Index>(i * stride));
  return DriverPath(std::move(g), std::move(v), kind_, hurst_, seed_);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t counter) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(seed ^ mix(counter + 0x632be59bd9b4e019ULL));
}

double fbm_covariance(double hurst, double t, double s) {
  double h2 = 2.0 * hurst;
  return 0.5 * (std::pow(std::abs(t), h2) + std::pow(std::abs(s), h2) - std::pow(std::abs(t - s), h2));
}

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct CholeskyCache {
  std::mutex build;
  std::mutex mutex;
  std::map<std::pair<std::uint64_t, double>, std::shared_ptr<const RowMajor>> factors;
  std::deque<std::pair<std::uint64_t, double>> order;
};

CholeskyCache& cache() {
  static CholeskyCache c;
  return c;
}

std::shared_ptr<const RowMajor> fbm_factor(double hurst, const TimeGrid& grid) {
  auto key = std::make_pair(grid.fingerprint(), hurst);
  CholeskyCache& c = cache();
  std::lock_guard<std::mutex> building(c.build);
  {
    std::lock_guard<std::mutex> lock(c.mutex);
    auto it = c.factors.find(key);
    if (it != c.factors.end()) return it->second;
  }
  const auto n = static_cast<Eigen::Index>(grid.cells());
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      double v = fbm_covariance(hurst, grid[static_cast<std::size_t>(i) + 1], grid[static_cast<std::size_t>(j) + 1]);
      cov(i, j) = v;
      cov(j, i) = v;
    }
  double scale = cov.diagonal().maxCoeff();
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
  for (int attempt = 0; attempt < 4; ++attempt) {
    Eigen::MatrixXd a = cov;
    if (jitter > 0.0) a.diagonal().array() += jitter;
    llt.compute(a);
    if (llt.info() == Eigen::Success) break;
    jitter = jitter == 0.0 ? 1e-12 * scale : jitter * 100.0;
    if (attempt == 3) throw CholeskyFailure("fBm covariance is not numerically positive definite");
  }
  auto factor = std::make_shared<const RowMajor>(RowMajor(llt.matrixL()));
  std::lock_guard<std::mutex> lock(c.mutex);
  auto [it, inserted] = c.factors.emplace(key, factor);
  if (inserted) {
    c.order.push_back(key);
    while (c.order.size() > 4) {
      c.factors.erase(c.order.front());
      c.order.pop_front();
    }
  }
  return it->second;
}

}  // namespace

DriverPath sample_fbm(double hurst, std::shared_ptr<const TimeGrid> grid, Eigen::Index n_dims, std::uint64_t seed) {
  if (!(hurst > 0.0 && hurst < 1.0)) throw InvalidInput("Hurst index must lie in (0, 1)");
  if (!grid) throw InvalidInput("fBm sampling needs a grid");
  if (n_dims < 1) throw InvalidInput("fBm needs at least one dimension");
  if (grid->cells() > kCholeskyCap) throw InvalidInput("grid exceeds the Cholesky sampling cap");
  auto factor = fbm_factor(hurst, *grid);
  const auto n = static_cast<Eigen::Index>(grid->cells());
  const auto& kern = kernels::active();
  Eigen::MatrixXd values = Eigen::MatrixXd::Zero(n + 1, n_dims);
  std::vector<double> z(static_cast<std::size_t>(n));
  for (Eigen::Index d = 0; d < n_dims; ++d) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(d)));
    std::normal_distribution<double> normal;
    for (auto& v : z) v = normal(rng);
    for (Eigen::Index i = 0; i < n; ++i)
      values(i + 1, d) = kern.dot(factor->data() + i * n, z.data(), static_cast<std::size_t>(i) + 1);
  }
  return DriverPath(std::move(grid), std::move(values), DriverKind::fbm, hurst, seed);
}

DriverPath sample_brownian(std::shared_ptr<const TimeGrid> grid, Eigen::Index n_dims, std::uint64_t seed) {
  if (!grid) throw InvalidInput("Brownian sampling needs a grid");
  if (n_dims < 1) throw InvalidInput("Brownian motion needs at least one dimension");
  Eigen::MatrixXd values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid->size()), n_dims);
  for (Eigen::Index d = 0; d < n_dims; ++d) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(d)));
    std::normal_distribution<double> normal;
    for (std::size_t i = 1; i < grid->size(); ++i) {
      double dt = (*grid)[i] - (*grid)[i - 1];
      auto r = static_cast<Eigen::Index>(i);
      values(r, d) = values(r - 1, d) + std::sqrt(dt) * normal(rng);
    }
  }
  return DriverPath(std::move(grid), std::move(values), DriverKind::brownian, 0.5, seed);
}

SmoothFunction smooth_function(const std::string& name, const Eigen::RowVectorXd& c) {
  SmoothFunction f;
  f.name = name;
  if (name == "linear") {
    f.value = [c](double t) -> Eigen::RowVectorXd { return c * t; };
    f.derivative = [c](double) -> Eigen::RowVectorXd { return c; };
    f.x1_tilde = [c](double xi, double s, double t) -> Eigen::RowVectorXd {
      return c * (xi == 0.0 ? t - s : exp_int(xi, 0.0, t - s));
    };
  } else if (name == "sin") {
    f.value = [c](double t) -> Eigen::RowVectorXd { return c * std::sin(t); };
    f.derivative = [c](double t) -> Eigen::RowVectorXd { return c * std::cos(t); };
    f.x1_tilde = [c](double xi, double s, double t) -> Eigen::RowVectorXd {
      double upper = xi * std::cos(t) + std::sin(t);
      double lower = std::exp(-xi * (t - s)) * (xi * std::cos(s) + std::sin(s));
      return c * ((upper - lower) / (1.0 + xi * xi));
    };
  } else if (name == "zero") {
    f.value = [c](double) -> Eigen::RowVectorXd { return Eigen::RowVectorXd::Zero(c.size()); };
    f.derivative = f.value;
    f.x1_tilde = [c](double, double, double) -> Eigen::RowVectorXd { return Eigen::RowVectorXd::Zero(c.size()); };
  } else {
    throw InvalidInput("unknown smooth driver '" + name + "'");
  }
  return f;
}

DriverPath sample_deterministic(const SmoothFunction& f, std::shared_ptr<const TimeGrid> grid) {
  Eigen::RowVectorXd first = f.value(0.0);
  Eigen::MatrixXd values(static_cast<Eigen::Index>(grid->size()), first.size());
  for (std::size_t i = 0; i < grid->size(); ++i) values.row(static_cast<Eigen::Index>(i)) = f.value((*grid)[i]);
  return DriverPath(std::move(grid), std::move(values), DriverKind::deterministic);
}

void write_driver_csv(const DriverPath& path, const std::string& file) {
  Table t;
  t.header.push_back("t");
  for (Eigen::Index j = 0; j < path.dims(); ++j) t.header.push_back("x" + std::to_string(j + 1));
  for (std::size_t i = 0; i < path.grid().size(); ++i) {
    std::vector<double> row{path.grid()[i]};
    for (Eigen::Index j = 0; j < path.dims(); ++j) row.push_back(path.values()(static_cast<Eigen::Index>(i), j));
    t.rows.push_back(std::move(row));
  }
  emit_csv(t, file);
}

DriverPath read_driver_csv(const std::string& file) {
  Table t = read_csv(file);
  if (t.header.size() < 2 || t.header[0] != "t") throw InvalidInput("driver csv needs a header t,x1,...,xn");
  for (std::size_t j = 1; j < t.header.size(); ++j)
    if (t.header[j] != "x" + std::to_string(j)) throw InvalidInput("driver csv needs a header t,x1,...,xn");
  std::vector<double> times;
  Eigen::MatrixXd values(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.header.size() - 1));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    times.push_back(t.rows[i][0]);
    for (std::size_t j = 1; j < t.header.size(); ++j)
      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j - 1)) = t.rows[i][j];
  }
  return DriverPath(std::make_shared<const TimeGrid>(std::move(times)), std::move(values));
}

}  // namespace convrough
