#pragma once

#include "splitdom/linalg.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace splitdom {

using FieldFn = std::function<Vector(const Vector&)>;
using JacobianFn = std::function<Matrix(const Vector&)>;

/// Autonomous smooth vector field on R^n with its Jacobian.
///
/// When no analytic Jacobian is supplied, central finite differences with
/// step 1e-6 * (1 + |x|) are used. An analytic Jacobian is checked against
/// finite differences at construction (declared singularities plus a few
/// deterministic probe points); disagreement above 1e-4 throws.
class VectorField {
 public:
  VectorField(std::string name, int dim, FieldFn field, JacobianFn jacobian = {},
              std::vector<Vector> declared_singularities = {},
              std::map<std::string, double> parameters = {});

  const std::string& name() const { return name_; }
  int dim() const { return dim_; }
  const std::vector<Vector>& declared_singularities() const { return singularities_; }
  const std::map<std::string, double>& parameters() const { return parameters_; }
  bool has_analytic_jacobian() const { return static_cast<bool>(jacobian_); }

  Vector operator()(const Vector& x) const { return field_(x); }
  Matrix jacobian(const Vector& x) const;
  Matrix finite_difference_jacobian(const Vector& x) const;
  double divergence(const Vector& x) const { return jacobian(x).trace(); }

  /// The field -X, whose flow is the time reversal of this one.
  VectorField reversed() const;

 private:
  std::string name_;
  int dim_;
  FieldFn field_;
  JacobianFn jacobian_;
  std::vector<Vector> singularities_;
  std::map<std::string, double> parameters_;
};

VectorField linear_field(const Matrix& a, std::string name = "linear");

VectorField lorenz_field(double sigma = 10.0, double rho = 28.0, double beta = 8.0 / 3.0);

}  // namespace splitdom
