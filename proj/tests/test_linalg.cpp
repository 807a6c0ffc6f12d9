#include "oracles.hpp"
#include "splitdom/linalg.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace splitdom;

namespace {

Matrix diag(std::initializer_list<double> d) {
  Vector v(static_cast<Eigen::Index>(d.size()));
  Eigen::Index i = 0;
  for (double x : d) v(i++) = x;
  return v.asDiagonal();
}

Matrix rotation(double theta) {
  Matrix r(2, 2);
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

}  // namespace

TEST_CASE("subspace frames are orthonormal and span the input") {
  Matrix m(3, 2);
  m << 1, 1, 0, 1, 0, 1e-3;
  const Subspace s(m);
  CHECK((s.frame().transpose() * s.frame() - Matrix::Identity(2, 2)).norm() < 1e-14);
  CHECK(s.contains(m.col(0)));
  CHECK(s.contains(m.col(1)));
  CHECK_FALSE(s.contains(Vector::Unit(3, 2) + Vector::Unit(3, 0)));
  CHECK(s.orthogonal_complement().dim() == 1);
  CHECK_THROWS_AS(Subspace(Matrix::Ones(3, 2)), LinalgError);
  CHECK_THROWS_AS(Subspace::coordinate(3, {0}).direct_sum(Subspace::line(Vector::Unit(3, 0) * 2)), LinalgError);
}

TEST_CASE("splitting angle") {
  const Subspace e = Subspace::line(Vector::Unit(2, 0));
  const double th = std::numbers::pi / 6;
  Vector fv(2);
  fv << std::cos(th), std::sin(th);
  CHECK(splitting_angle_sin(e, Subspace::line(fv)) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(splitting_angle_sin(e, Subspace::line(Vector::Unit(2, 1))) == 1.0);
  CHECK_THROWS_AS(splitting_angle_sin(e, e), DegenerateSplitting);

  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix q = oracle::random_orthogonal(rng, 4);
    const Subspace a(q.leftCols(2) + 0.3 * oracle::gaussian(rng, 4, 2));
    const Subspace b(q.rightCols(2));
    const double s = splitting_angle_sin(a, b);
    CHECK(s > 0.0);
    CHECK(s <= 1.0 + 1e-15);
    // the value is 1/|pi(E)| and invariant under orthogonal changes of coordinates
    CHECK(s == doctest::Approx(1.0 / singular_values(oblique_projection(a, b))(0)).epsilon(1e-12));
    const Matrix u = oracle::random_orthogonal(rng, 4);
    CHECK(splitting_angle_sin(a.image(u), b.image(u)) == doctest::Approx(s).epsilon(1e-10));
  }
  CHECK(splitting_angle_sin(Subspace::coordinate(4, {0, 1}), Subspace::coordinate(4, {2, 3})) == 1.0);
}

TEST_CASE("wedge square") {
  Matrix a(2, 2);
  a << 1, 2, 3, 4;
  CHECK(wedge_square(a).rows() == 1);
  CHECK(wedge_square(a)(0, 0) == doctest::Approx(-2.0));
  CHECK((wedge_square(Matrix::Identity(3, 3)) - Matrix::Identity(3, 3)).norm() == 0.0);
  CHECK((wedge_square(diag({2, 3, 5})) - diag({6, 10, 15})).norm() < 1e-14);
  CHECK_THROWS(wedge_square(Matrix::Identity(1, 1)));
  CHECK(wedge_index(0, 1, 4) == 0);
  CHECK(wedge_index(2, 3, 4) == 5);

  std::mt19937_64 rng(11);
  for (int n : {3, 4, 5}) {
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix m = oracle::gaussian(rng, n, n);
      const Vector sw = singular_values(wedge_square(m));
      const auto expect = oracle::pairwise_products(singular_values(m));
      REQUIRE(sw.size() == static_cast<Eigen::Index>(expect.size()));
      for (std::size_t i = 0; i < expect.size(); ++i) {
        CHECK(std::abs(sw(static_cast<Eigen::Index>(i)) - expect[i]) <= 1e-9 * std::max(1.0, expect[i]));
      }
      // functoriality
      const Matrix p = oracle::gaussian(rng, n, n);
      CHECK((wedge_square(m * p) - wedge_square(m) * wedge_square(p)).norm() <=
            1e-12 * (1.0 + wedge_square(m * p).norm()));
    }
  }
}

TEST_CASE("min two-plane determinant") {
  CHECK(min_two_plane_det(diag({3, 2, 1}), Subspace::full(3)) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(min_two_plane_det(Matrix::Identity(4, 4), Subspace::full(4)) == doctest::Approx(1.0));
  Matrix r = Matrix::Zero(3, 3);
  r.topLeftCorner(2, 2) = 2.0 * rotation(0.7);
  r(2, 2) = 0.1;
  CHECK(min_two_plane_det(r, Subspace::coordinate(3, {0, 1})) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK_THROWS(min_two_plane_det(r, Subspace::coordinate(3, {0})));

  std::mt19937_64 rng(3);
  // dense grid of planes for diag(3,2,1): planes through normals on a sphere grid
  double grid_min = 1e300;
  for (int i = 0; i <= 200; ++i) {
    for (int j = 0; j <= 400; ++j) {
      const double th = std::numbers::pi * i / 200.0;
      const double ph = 2.0 * std::numbers::pi * j / 400.0;
      Vector nrm(3);
      nrm << std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th);
      const Matrix p = Subspace(nrm).orthogonal_complement().frame();
      grid_min = std::min(grid_min, oracle::plane_det(diag({3, 2, 1}), p));
    }
  }
  CHECK(grid_min == doctest::Approx(2.0).epsilon(1e-6));

  for (int trial = 0; trial < 10; ++trial) {
    const int n = 3 + trial % 3;
    const Matrix a = oracle::gaussian(rng, n, n);
    const Subspace f(oracle::gaussian(rng, n, n - trial % 2));
    const double fast = min_two_plane_det(a, f);
    const double brute = oracle::brute_min_two_plane_det(a, f.frame(), rng, 10000);
    CHECK(oracle::rel(fast, brute) < 1e-8);
  }
}

TEST_CASE("restricted norms") {
  CHECK(restrict_norm(Matrix::Identity(3, 3), Subspace::coordinate(3, {1})) == doctest::Approx(1.0));
  CHECK(restrict_norm(diag({2, 0.5}), Subspace::coordinate(2, {1})) == doctest::Approx(0.5));
  CHECK(restrict_norm(diag({3, 2, 1}), Subspace::coordinate(3, {1, 2})) == doctest::Approx(2.0));
  CHECK(conorm(diag({3, 2, 1}), Subspace::coordinate(3, {1, 2})) == doctest::Approx(1.0));
  CHECK(conorm(diag({1, 0})) == 0.0);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix a = oracle::gaussian(rng, 4, 4);
    const Matrix b = oracle::gaussian(rng, 4, 4);
    CHECK(conorm(a * b) >= conorm(a) * conorm(b) * (1 - 1e-12));
    const Subspace s(oracle::gaussian(rng, 4, 2));
    CHECK(restrict_norm(a * b, s) <= restrict_norm(a, s.image(b)) * restrict_norm(b, s) * (1 + 1e-12));
  }
}

TEST_CASE("principal angles") {
  const Subspace a = Subspace::coordinate(3, {0, 1});
  CHECK(subspace_distance(a, a) < 1e-15);
  const Subspace b(Matrix([&] {
    Matrix m(3, 2);
    m << 0, 1, 1, 0, 0, 1;
    return m;
  }()));
  CHECK(subspace_distance(a, b) == doctest::Approx(std::sqrt(0.5)));
  CHECK(min_principal_angle_sin(a, b) < 1e-14);
}

TEST_CASE("matrix exponential") {
  CHECK((expm(Matrix::Zero(3, 3), 2.0) - Matrix::Identity(3, 3)).norm() == 0.0);
  CHECK((expm(diag({1, -2, 0.5}), 1.5) - diag({std::exp(1.5), std::exp(-3.0), std::exp(0.75)})).norm() < 1e-12);
  Matrix nil(2, 2);
  nil << 0, 1, 0, 0;
  Matrix expect(2, 2);
  expect << 1, 1, 0, 1;
  CHECK((expm(nil, 1.0) - expect).norm() < 1e-15);

  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 4;
    const auto m = oracle::random_diagonalizable(rng, n, 3.0);
    for (double t : {0.1, 1.0, 3.0}) {
      CHECK(relative_difference(expm(m.a, t), oracle::expm_diag(m, t)) < 1e-10);
    }
    const Matrix g = oracle::gaussian(rng, n, n);
    CHECK(relative_difference(expm(g, 0.7), oracle::expm_taylor(g, 0.7)) < 1e-10);
    // group property, |A|(t+s) <= 20
    const double t = 2.5;
    const double s = 3.0;
    CHECK(relative_difference(expm(m.a, t) * expm(m.a, s), expm(m.a, t + s)) < 1e-9);
  }
}
