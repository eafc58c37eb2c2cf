#include "convrough/sigma.hpp"

#include <cmath>

#include "convrough/errors.hpp"

namespace convrough {

SigmaField::SigmaField(Eigen::Index n, Eigen::Index d, Eval value, Derivs d1, Derivs d2, Derivs d3,
                       std::array<double, 4> bounds, std::string name)
    : n_(n), d_(d), value_(std::move(value)), d1_(std::move(d1)), d2_(std::move(d2)), d3_(std::move(d3)),
      bounds_(bounds), name_(std::move(name)) {
  if (n_ < 1 || d_ < 1) throw InvalidInput("sigma needs positive dimensions");
}

Eigen::MatrixXd SigmaField::operator()(const Eigen::RowVectorXd& y) const {
  Eigen::MatrixXd out;
  value_(y, out);
  return out;
}

std::vector<Eigen::MatrixXd> SigmaField::jacobian(const Eigen::RowVectorXd& y) const {
  std::vector<Eigen::MatrixXd> out;
  d1_(y, out);
  return out;
}

std::vector<Eigen::MatrixXd> SigmaField::hessian(const Eigen::RowVectorXd& y) const {
  std::vector<Eigen::MatrixXd> out;
  d2_(y, out);
  return out;
}

std::vector<Eigen::MatrixXd> SigmaField::third(const Eigen::RowVectorXd& y) const {
  std::vector<Eigen::MatrixXd> out;
  d3_(y, out);
  return out;
}

namespace {

struct Scalar {
  std::function<double(double)> f[4];
  std::array<double, 4> bound;
};

Scalar scalar_catalog(const std::string& name) {
  if (name == "zero" || name == "constant")
    return {{[](double) { return 0.0; }, [](double) { return 0.0; }, [](double) { return 0.0; },
             [](double) { return 0.0; }},
            {0.0, 0.0, 0.0, 0.0}};
  if (name == "linear")
    return {{[](double y) { return y; }, [](double) { return 1.0; }, [](double) { return 0.0; },
             [](double) { return 0.0; }},
            {HUGE_VAL, 1.0, 0.0, 0.0}};
  if (name == "sin")
    return {{[](double y) { return std::sin(y); }, [](double y) { return std::cos(y); },
             [](double y) { return -std::sin(y); }, [](double y) { return -std::cos(y); }},
            {1.0, 1.0, 1.0, 1.0}};
  if (name == "tanh")
    return {{[](double y) { return std::tanh(y); },
             [](double y) {
               double c = 1.0 / std::cosh(y);
               return c * c;
             },
             [](double y) {
               double c = 1.0 / std::cosh(y);
               return -2.0 * std::tanh(y) * c * c;
             },
             [](double y) {
               double c = 1.0 / std::cosh(y), th = std::tanh(y);
               return -2.0 * c * c * (c * c - 2.0 * th * th);
             }},
            {1.0, 1.0, 0.7698003589195010, 2.0}};
  throw InvalidInput("unknown sigma '" + name + "'");
}

}  // namespace

SigmaField make_sigma(const std::string& name, const Eigen::MatrixXd& offset, const Eigen::MatrixXd& scale,
                      const Eigen::MatrixXd& coupling) {
  const Eigen::Index n = offset.rows(), d = offset.cols();
  if (n < 1 || d < 1) throw InvalidInput("sigma offset must be a nonempty n x d matrix");
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n * d, d);
  if (coupling.size() > 0) {
    if (coupling.rows() != n * d || coupling.cols() != d) throw InvalidInput("sigma coupling must be (n d) x d");
    a = coupling;
  } else if (scale.size() > 0) {
    if (scale.rows() != n || scale.cols() != d) throw InvalidInput("sigma scale must be n x d");
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index l = 0; l < d; ++l) a(i * d + l, l) = scale(i, l);
  }
  Eigen::MatrixXd b = offset;
  if (name == "zero") {
    b.setZero();
    a.setZero();
  }
  if (name == "constant") a.setZero();
  Scalar g = scalar_catalog(name);
  double amax = a.cwiseAbs().rowwise().sum().maxCoeff();
  std::array<double, 4> bounds{b.cwiseAbs().maxCoeff() + amax * g.bound[0], amax * g.bound[1], amax * g.bound[2],
                               amax * g.bound[3]};

  auto value = [a, b, g, n, d](const Eigen::RowVectorXd& y, Eigen::MatrixXd& out) {
    if (y.size() != d) throw InvalidInput("sigma argument has the wrong dimension");
    out = b;
    for (Eigen::Index m = 0; m < d; ++m) {
      double gm = g.f[0](y(m));
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index l = 0; l < d; ++l) out(i, l) += a(i * d + l, m) * gm;
    }
  };
  auto derivs = [a, g, n, d](int order) {
    return [a, g, n, d, order](const Eigen::RowVectorXd& y, std::vector<Eigen::MatrixXd>& out) {
      if (y.size() != d) throw InvalidInput("sigma argument has the wrong dimension");
      std::size_t count = 1;
      for (int o = 0; o < order; ++o) count *= static_cast<std::size_t>(d);
      out.assign(count, Eigen::MatrixXd::Zero(n, d));
      for (Eigen::Index m = 0; m < d; ++m) {
        double gm = g.f[order](y(m));
        std::size_t idx = 0;
        for (int o = 0; o < order; ++o) idx = idx * static_cast<std::size_t>(d) + static_cast<std::size_t>(m);
        for (Eigen::Index i = 0; i < n; ++i)
          for (Eigen::Index l = 0; l < d; ++l) out[idx](i, l) = a(i * d + l, m) * gm;
      }
    };
  };
  return SigmaField(n, d, value, derivs(1), derivs(2), derivs(3), bounds, name);
}

}  // namespace convrough
