#include "splitdom/vector_field.hpp"

#include <cmath>
#include <stdexcept>

namespace splitdom {

namespace {

constexpr double kJacobianSelfCheckTol = 1e-4;

std::vector<Vector> probe_points(int dim) {
  // deterministic, spread over a few scales
  std::vector<Vector> pts;
  for (int k = 0; k < 4; ++k) {
    Vector p(dim);
    for (int i = 0; i < dim; ++i) {
      p(i) = std::sin(1.7 * (i + 1) + 2.3 * k) * std::pow(3.0, k - 1);
    }
    pts.push_back(p);
  }
  return pts;
}

}  // namespace

VectorField::VectorField(std::string name, int dim, FieldFn field, JacobianFn jacobian,
                         std::vector<Vector> declared_singularities,
                         std::map<std::string, double> parameters)
    : name_(std::move(name)),
      dim_(dim),
      field_(std::move(field)),
      jacobian_(std::move(jacobian)),
      singularities_(std::move(declared_singularities)),
      parameters_(std::move(parameters)) {
  if (dim_ < 1) throw std::invalid_argument("vector field dimension must be positive");
  if (!field_) throw std::invalid_argument("vector field evaluator missing");
  for (const auto& s : singularities_) {
    if (s.size() != dim_) throw std::invalid_argument("declared singularity has wrong dimension");
  }
  if (!jacobian_) return;
  std::vector<Vector> pts = singularities_;
  for (auto& p : probe_points(dim_)) pts.push_back(std::move(p));
  for (const auto& p : pts) {
    const Matrix analytic = jacobian_(p);
    if (analytic.rows() != dim_ || analytic.cols() != dim_) {
      throw std::invalid_argument(name_ + ": jacobian has wrong shape");
    }
    const double err = (analytic - finite_difference_jacobian(p)).cwiseAbs().maxCoeff();
    if (!(err <= kJacobianSelfCheckTol)) {
      throw std::invalid_argument(name_ + ": analytic jacobian disagrees with finite differences (" +
                                  std::to_string(err) + ")");
    }
  }
}

Matrix VectorField::jacobian(const Vector& x) const {
  return jacobian_ ? jacobian_(x) : finite_difference_jacobian(x);
}

Matrix VectorField::finite_difference_jacobian(const Vector& x) const {
  const double h = 1e-6 * (1.0 + x.norm());
  Matrix j(dim_, dim_);
  Vector xp = x;
  Vector xm = x;
  for (int c = 0; c < dim_; ++c) {
    xp(c) = x(c) + h;
    xm(c) = x(c) - h;
    j.col(c) = (field_(xp) - field_(xm)) / (2.0 * h);
    xp(c) = x(c);
    xm(c) = x(c);
  }
  return j;
}

VectorField VectorField::reversed() const {
  FieldFn f = [g = field_](const Vector& x) -> Vector { return -g(x); };
  JacobianFn j;
  if (jacobian_) j = [g = jacobian_](const Vector& x) -> Matrix { return -g(x); };
  return VectorField(name_ + "_reversed", dim_, std::move(f), std::move(j), singularities_, parameters_);
}

VectorField linear_field(const Matrix& a, std::string name) {
  if (a.rows() != a.cols()) throw std::invalid_argument("linear field needs a square matrix");
  const int n = static_cast<int>(a.rows());
  return VectorField(
      std::move(name), n, [a](const Vector& x) -> Vector { return a * x; },
      [a](const Vector&) -> Matrix { return a; }, {Vector::Zero(n)});
}

VectorField lorenz_field(double sigma, double rho, double beta) {
  FieldFn f = [=](const Vector& x) -> Vector {
    Vector d(3);
    d << sigma * (x(1) - x(0)), x(0) * (rho - x(2)) - x(1), x(0) * x(1) - beta * x(2);
    return d;
  };
  JacobianFn j = [=](const Vector& x) -> Matrix {
    Matrix m(3, 3);
    m << -sigma, sigma, 0.0,
         rho - x(2), -1.0, -x(0),
         x(1), x(0), -beta;
    return m;
  };
  std::vector<Vector> sing{Vector::Zero(3)};
  if (rho > 1.0) {
    const double r = std::sqrt(beta * (rho - 1.0));
    sing.push_back((Vector(3) << r, r, rho - 1.0).finished());
    sing.push_back((Vector(3) << -r, -r, rho - 1.0).finished());
  }
  return VectorField("lorenz", 3, std::move(f), std::move(j), std::move(sing),
                     {{"sigma", sigma}, {"rho", rho}, {"beta", beta}});
}

}  // namespace splitdom
