#include "oracles.hpp"
#include "splitdom/integrator.hpp"
#include "splitdom/singularity.hpp"
#include "splitdom/vector_field.hpp"

#include <doctest.h>

#include <cmath>

using namespace splitdom;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Matrix product(const VariationalResult& r) {
  const auto n = r.orbit.x0.size();
  Matrix p = Matrix::Identity(n, n);
  for (const auto& f : r.factors) p = f.phi * p;
  return p;
}

}  // namespace

TEST_CASE("analytic Jacobians are checked against finite differences") {
  const VectorField lz = lorenz_field();
  CHECK(lz.has_analytic_jacobian());
  const Vector x = vec({1.0, -2.0, 20.0});
  CHECK((lz.jacobian(x) - lz.finite_difference_jacobian(x)).norm() < 1e-6);
  CHECK(lz.divergence(x) == doctest::Approx(-(10.0 + 1.0 + 8.0 / 3.0)));

  auto field = [](const Vector& v) { return Vector(v.array().square()); };
  auto wrong = [](const Vector& v) { return Matrix(Matrix::Identity(v.size(), v.size())); };
  CHECK_THROWS(VectorField("bad", 2, field, wrong));
}

TEST_CASE("linear flows match the matrix exponential") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 2 + trial % 3;
    const auto m = oracle::random_diagonalizable(rng, n, 3.0);
    const VectorField f = linear_field(m.a);
    const Vector x0 = oracle::gaussian(rng, n, 1).col(0);
    IntegratorOptions opts;
    opts.escape_norm = 1e30;  // spectral radius up to 3 over t = 10
    const OrbitSegment orbit = integrate(f, x0, 10.0, opts, {1.0, 2.5, 10.0});
    REQUIRE(orbit.states.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      const Vector exact = oracle::expm_diag(m, orbit.times[i]) * x0;
      CHECK((orbit.states[i] - exact).norm() <= 1e-6 * std::max(1.0, exact.norm()));
    }
  }
}

TEST_CASE("zero field and escape") {
  const VectorField zero("zero", 2, [](const Vector& x) { return Vector(Vector::Zero(x.size())); });
  const OrbitSegment o = integrate(zero, vec({0.3, 0.4}), 5.0);
  CHECK((o.final_state() - vec({0.3, 0.4})).norm() == 0.0);

  const VectorField blow("blowup", 1, [](const Vector& x) { return Vector(x.array().square()); });
  try {
    integrate(blow, vec({1.0}), 2.0);
    FAIL("expected escape");
  } catch (const IntegrationError& e) {
    CHECK(e.kind() == IntegrationError::Kind::escape);
    CHECK(!e.partial().states.empty());
  }
}

TEST_CASE("Lorenz orbits stay in the trapping region") {
  const OrbitSegment o = integrate(lorenz_field(), vec({1, 1, 1}), 50.0);
  double max_norm = 0.0;
  for (const auto& x : o.states) max_norm = std::max(max_norm, x.norm());
  CHECK(max_norm < 100.0);
  CHECK(o.rejected_steps < o.accepted_steps);
}

TEST_CASE("flow property and time reversal") {
  const VectorField lz = lorenz_field();
  const Vector x0 = vec({1, 1, 20});
  for (auto [s, t] : {std::pair{1.0, 2.0}, std::pair{3.0, 4.0}, std::pair{0.5, 7.5}}) {
    const Vector xs = integrate(lz, x0, s).final_state();
    const Vector two_step = integrate(lz, xs, t).final_state();
    const Vector one_step = integrate(lz, x0, s + t).final_state();
    CHECK((two_step - one_step).norm() < 1e-6 * (1 + one_step.norm()));
  }
  const VectorField lin = linear_field(Matrix(vec({-1.0, 0.5}).asDiagonal()));
  const Vector y = vec({0.3, -2});
  const OrbitSegment back = integrate(lin, integrate(lin, y, 2.0).final_state(), -2.0);
  CHECK(back.times.back() == doctest::Approx(-2.0));
  CHECK((back.final_state() - y).norm() < 1e-8);
}

TEST_CASE("variational integration") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 5; ++trial) {
    const auto m = oracle::random_diagonalizable(rng, 3, 3.0);
    VariationalOptions opts;
    opts.integrator.escape_norm = 1e30;
    const VariationalResult r = variational(linear_field(m.a), vec({0.1, 0.2, 0.3}), 6.0, opts);
    CHECK(relative_difference(product(r), oracle::expm_diag(m, 6.0)) < 1e-6);
    for (const auto& f : r.factors) {
      CHECK((f.phi * f.phi_inv - Matrix::Identity(3, 3)).norm() < 1e-8);
    }
  }

  const VectorField lz = lorenz_field();
  const Vector x0 = vec({1, 1, 20});
  const VariationalResult r = variational(lz, x0, 10.0);
  double log_det = 0.0;
  double div = 0.0;
  for (const auto& f : r.factors) {
    log_det += std::log(std::abs(f.phi.determinant()));
    div += f.divergence_integral;
  }
  CHECK(std::abs(log_det - (-(10.0 + 1.0 + 8.0 / 3.0) * 10.0)) < 1e-5 * 136.67);
  CHECK(div == doctest::Approx(-(10.0 + 1.0 + 8.0 / 3.0) * 10.0).epsilon(1e-10));

  // chain rule across a split point
  const VariationalResult a = variational(lz, x0, 0.7);
  const VariationalResult b = variational(lz, a.orbit.final_state(), 0.5);
  const VariationalResult ab = variational(lz, x0, 1.2);
  CHECK(relative_difference(product(b) * product(a), product(ab)) < 1e-6);

  // columns against central differences of the flow map
  const double h = 1e-5;
  const Matrix phi = product(a);
  for (int j = 0; j < 3; ++j) {
    const Vector e = Vector::Unit(3, j) * h;
    const Vector col = (integrate(lz, x0 + e, 0.7).final_state() - integrate(lz, x0 - e, 0.7).final_state()) / (2 * h);
    CHECK((col - phi.col(j)).norm() <= 1e-4 * col.norm());
  }

  // reversed field gives the inverse
  const Vector x1 = a.orbit.final_state();
  const VariationalResult rev = variational(lz.reversed(), x1, 0.7);
  CHECK(relative_difference(product(rev), phi.inverse()) < 1e-5);

  const VariationalResult zero = variational(lz, x0, 0.0);
  CHECK(relative_difference(product(zero), Matrix::Identity(3, 3)) < 1e-15);
}

TEST_CASE("singularities") {
  const SingularityRecord o = refine_singularity(lorenz_field(), vec({1e-3, -1e-3, 1e-3}));
  CHECK(o.location.norm() < 1e-10);
  CHECK(o.residual < 1e-12);
  CHECK(o.hyperbolic);
  CHECK(o.real_spectrum());
  REQUIRE(o.eigenvalues.size() == 3);
  const double s = std::sqrt(1201.0);
  CHECK(std::abs(o.eigenvalues[0].real() - (-11 + s) / 2) < 1e-10);
  CHECK(std::abs(o.eigenvalues[1].real() + 8.0 / 3.0) < 1e-10);
  CHECK(std::abs(o.eigenvalues[2].real() - (-11 - s) / 2) < 1e-10);

  const LorenzLikeCheck ll = is_lorenz_like(o);
  CHECK(ll.applicable);
  CHECK(ll.ordering);
  CHECK_FALSE(ll.area_expanding);
  CHECK_FALSE(ll.holds());
  CHECK(ll.lambda1 + ll.lambda2 == doctest::Approx(-11.0));

  const Matrix d = vec({2, -1.5, -1}).asDiagonal();
  const SingularityRecord lin = refine_singularity(linear_field(d), vec({1e-3, 0, 0}));
  CHECK(lin.location.norm() < 1e-12);
  CHECK(is_lorenz_like(lin).holds());
  CHECK(is_lorenz_like(analyze_equilibrium(Matrix(vec({1, -2, -3}).asDiagonal()), Vector::Zero(3))).holds() == false);

  Matrix rot(3, 3);
  rot << 0.1, -1, 0, 1, 0.1, 0, 0, 0, -1;
  const SingularityRecord complex_rec = analyze_equilibrium(rot, Vector::Zero(3));
  CHECK_FALSE(complex_rec.real_spectrum());
  CHECK_FALSE(is_lorenz_like(complex_rec).applicable);
  CHECK(complex_rec.unstable->dim() == 2);

  Matrix jordan(2, 2);
  jordan << -1, 1, 0, -1;
  CHECK(analyze_equilibrium(jordan, Vector::Zero(2)).defective);

  CHECK_THROWS_AS(refine_singularity(lorenz_field(), vec({5, 5, 5})), SingularityError);
  RefineOptions no_basin;
  no_basin.basin_residual = 0.0;
  no_basin.max_iterations = 3;
  const VectorField far("shifted", 1, [](const Vector& x) { return Vector(x.array().atan()); });
  CHECK_THROWS_AS(refine_singularity(far, vec({10.0}), no_basin), SingularityError);
}
