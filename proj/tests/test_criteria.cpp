#include "oracles.hpp"
#include "splitdom/criteria.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

using namespace splitdom;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Matrix diag(std::initializer_list<double> d) { return vec(d).asDiagonal(); }

const double kSqrt1201 = std::sqrt(1201.0);
const double kLorenz1 = (-11.0 + kSqrt1201) / 2.0;
const double kLorenz2 = (-11.0 - kSqrt1201) / 2.0;
const double kLorenz3 = -8.0 / 3.0;

SplittingField coordinate_split(int n, std::vector<int> e, std::vector<int> f) {
  return SplittingField::constant("coordinate", Subspace::coordinate(n, e), Subspace::coordinate(n, f));
}

std::shared_ptr<const CocycleSystem> linear_system(const Matrix& a) { return std::make_shared<LinearFlowSystem>(a); }

/// Independent least-squares slope over t in [from, to].
double slope_between(const std::vector<double>& t, const std::vector<double>& y, double from, double to) {
  double n = 0, st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < from - 1e-9 || t[i] > to + 1e-9) continue;
    n += 1;
    st += t[i];
    sy += y[i];
    stt += t[i] * t[i];
    sty += t[i] * y[i];
  }
  return (n * sty - st * sy) / (n * stt - st * st);
}

/// Limit cycle on the unit circle with radial Floquet exponent -2.
VectorField limit_cycle() {
  return VectorField(
      "limit_cycle", 2,
      [](const Vector& x) {
        const double r2 = x.squaredNorm();
        return vec({-x(1) + x(0) * (1 - r2), x(0) + x(1) * (1 - r2)});
      },
      [](const Vector& x) {
        const double r2 = x.squaredNorm();
        Matrix j(2, 2);
        j << 1 - r2 - 2 * x(0) * x(0), -1 - 2 * x(0) * x(1), 1 - 2 * x(0) * x(1), 1 - r2 - 2 * x(1) * x(1);
        return j;
      });
}

/// Alternates a quarter turn with diag(0.1, 10): constant splittings are not
/// invariant under it.
class AlternatingSystem final : public CocycleSystem {
 public:
  std::string name() const override { return "alternating"; }
  int dim() const override { return 2; }
  int state_dim() const override { return 1; }
  CocycleSegment segment(const Vector& x, double t) const override {
    Matrix turn(2, 2);
    turn << 0, -1, 1, 0;
    std::vector<double> times{0.0};
    std::vector<Vector> points{x};
    std::vector<Factor> factors;
    for (int k = 0; k < static_cast<int>(std::lround(t)); ++k) {
      const bool even = (static_cast<long>(x(0)) + k) % 2 == 0;
      factors.push_back(Factor::from_matrix(even ? turn : diag({0.1, 10.0})));
      times.push_back(k + 1.0);
      points.push_back(vec({x(0) + k + 1.0}));
    }
    return CocycleSegment(2, times, points, factors);
  }
};

struct LorenzData {
  std::shared_ptr<const CocycleSegment> trajectory;
  SplittingField split;
  std::vector<std::size_t> indices;
};

const LorenzData& lorenz_data() {
  static const LorenzData data = [] {
    const Vector x0 = integrate(lorenz_field(), vec({1, 1, 20}), 20.0).final_state();
    auto traj = std::make_shared<const CocycleSegment>(variational_cocycle(lorenz_field(), x0, 100.0));
    std::vector<std::size_t> idx;
    for (std::size_t i = 10; i <= 60; ++i) idx.push_back(i);
    EstimatedSplitting est = estimate_splitting(*traj, 1, idx);
    return LorenzData{traj, est.field, idx};
  }();
  return data;
}

}  // namespace

TEST_CASE("slope fits") {
  std::vector<double> t, y;
  for (int i = 0; i <= 100; ++i) {
    t.push_back(0.1 * i);
    y.push_back(i < 20 ? 5.0 : 2.0 - 3.0 * 0.1 * i);
  }
  const LinearFit f = fit_slope(t, y);
  CHECK(f.slope == doctest::Approx(-3.0).epsilon(1e-12));
  CHECK(f.residual < 1e-12);
  CHECK(log_constant(t, y, -3.0) == doctest::Approx(5.0 + 3.0 * 1.9).epsilon(1e-12));
  CHECK_THROWS(fit_slope({1.0}, {1.0}));
  CHECK(geometric_time_grid(2.0) == std::vector<double>{0.25, 0.5, 1.0, 2.0});
}

TEST_CASE("domination quotient closed forms") {
  const SplittingField split = coordinate_split(2, {0}, {1});
  CHECK(*domination_quotient(split, CocycleSegment::identity(2, Vector::Zero(2))) == 0.0);
  const CocycleSegment seg = LinearFlowSystem(diag({-2, 1})).segment(Vector::Ones(2), 6.0);
  const QuotientSeries q = domination_quotient_series(split, seg);
  for (std::size_t i = 0; i < q.times.size(); ++i) {
    CHECK(q.log_quotient[i] == doctest::Approx(-3.0 * q.times[i]).epsilon(1e-12));
  }
  const CocycleSegment saddle = LinearFlowSystem(diag({2, -1.5, -1})).segment(Vector::Ones(3), 6.0);
  CHECK(*domination_quotient(coordinate_split(3, {2}, {0, 1}), saddle) == doctest::Approx(3.0).epsilon(1e-12));

  // singular restriction on F
  const std::vector<Factor> collapse{Factor::from_matrix(diag({0.5, 0.0}))};
  const CocycleSegment dead(2, {0.0, 1.0}, {Vector::Zero(2), Vector::Zero(2)}, collapse);
  CHECK(std::isinf(domination_quotient_series(split, dead).log_quotient.back()));
}

TEST_CASE("domination quotient is submultiplicative along orbits") {
  // oblique eigenvectors
  Matrix a(2, 2);
  a << -2, 3, 0, 1;
  const SplittingField oblique =
      SplittingField::constant("oblique", Subspace::coordinate(2, {0}), Subspace::line(vec({1, 1})));
  const CocycleSegment lin = LinearFlowSystem(a, "oblique", 0.5).segment(vec({1, 2}), 12.0);
  const auto& d = lorenz_data();
  int checked = 0;
  for (std::size_t s = 1; s <= 8; ++s) {
    for (std::size_t t = 1; t <= 8; ++t) {
      const double whole = *domination_quotient(oblique, lin.slice(0, s + t));
      const double first = *domination_quotient(oblique, lin.slice(0, s));
      const double second = *domination_quotient(oblique, lin.slice(s, s + t));
      CHECK(whole <= first + second + std::log1p(1e-6));
      for (std::size_t i0 : {10, 17, 25}) {
        const double lw = *domination_quotient(d.split, d.trajectory->slice(i0, i0 + s + t));
        const double l1 = *domination_quotient(d.split, d.trajectory->slice(i0, i0 + s));
        const double l2 = *domination_quotient(d.split, d.trajectory->slice(i0 + s, i0 + s + t));
        CHECK(lw <= l1 + l2 + std::log1p(1e-6));
        ++checked;
      }
    }
  }
  CHECK(checked == 192);
}

TEST_CASE("singularity domination from eigenvalues and from integration") {
  const VectorField lz = lorenz_field();
  const SingularityRecord rec = refine_singularity(lz, Vector::Zero(3));
  const Subspace e = rec.eigenspace(std::vector<double>{kLorenz2});
  const Subspace f = rec.eigenspace(std::vector<double>{kLorenz1, kLorenz3});
  const Verdict v = singularity_domination(rec, e, f);
  CHECK(v.status == Status::pass);
  CHECK(*v.exponent == doctest::Approx(kLorenz2 - kLorenz3).epsilon(1e-12));
  CHECK(std::abs(*v.exponent - (-20.161)) < 1e-3);

  const Verdict swapped = singularity_domination(rec, rec.eigenspace(std::vector<double>{kLorenz3}),
                                                 rec.eigenspace(std::vector<double>{kLorenz1, kLorenz2}));
  CHECK(swapped.status == Status::fail);
  CHECK(*swapped.exponent == doctest::Approx(20.161).epsilon(1e-4));
  REQUIRE(swapped.witness.has_value());

  CHECK_THROWS_AS(singularity_domination(rec, Subspace::coordinate(3, {0}), Subspace::coordinate(3, {1, 2})),
                  std::invalid_argument);

  // integrated quotient slope over t in [5, 50]
  const SplittingField split = SplittingField::constant("origin", e, f);
  const CocycleSegment seg = FlowSystem(lz).segment(Vector::Zero(3), 50.0);
  const QuotientSeries q = domination_quotient_series(split, seg);
  CHECK(std::abs(slope_between(q.times, q.log_quotient, 5.0, 50.0) - *v.exponent) < 1e-3);

  const SingularityRecord saddle = analyze_equilibrium(diag({2, -1.5, -1}), Vector::Zero(3));
  const Verdict sv = singularity_domination(saddle, Subspace::coordinate(3, {2}), Subspace::coordinate(3, {0, 1}));
  CHECK(sv.status == Status::fail);
  CHECK(*sv.exponent == doctest::Approx(0.5).epsilon(1e-12));
  const CocycleSegment sseg = FlowSystem(linear_field(diag({2, -1.5, -1}))).segment(Vector::Zero(3), 50.0);
  const QuotientSeries sq = domination_quotient_series(coordinate_split(3, {2}, {0, 1}), sseg);
  CHECK(std::abs(slope_between(sq.times, sq.log_quotient, 5.0, 50.0) - 0.5) < 1e-3);

  CHECK(*singularity_contraction(saddle, Subspace::coordinate(3, {2})).exponent == doctest::Approx(-1.0));
  CHECK(*singularity_sectional_expansion(saddle, Subspace::coordinate(3, {0, 1})).exponent == doctest::Approx(0.5));
  CHECK(*singularity_sectional_contraction(analyze_equilibrium(diag({1.5, -2, -0.5, 1}), Vector::Zero(4)),
                                           Subspace::coordinate(4, {1, 3}))
             .exponent == doctest::Approx(-1.0));
}

TEST_CASE("finite-time domination") {
  const SingularityRecord rec = refine_singularity(lorenz_field(), Vector::Zero(3));
  const SplittingField split = SplittingField::constant("origin", rec.eigenspace(std::vector<double>{kLorenz2}),
                                                        rec.eigenspace(std::vector<double>{kLorenz1, kLorenz3}));
  const auto lz = std::make_shared<FlowSystem>(lorenz_field());
  const PointSamples origin(lz, {Vector::Zero(3)}, "origin");
  std::vector<double> grid;
  for (int k = 1; k <= 100; ++k) grid.push_back(0.01 * k);
  const Verdict v = finite_time_domination(split, origin, grid);
  CHECK(v.status == Status::pass);
  CHECK(v.values.at("T") <= 0.05);
  CHECK(v.values.at("T") > std::log(2.0) / 20.161);

  const PointSamples saddle(linear_system(diag({2, -1.5, -1})), {Vector::Zero(3)});
  const Verdict sv = finite_time_domination(coordinate_split(3, {2}, {0, 1}), saddle, geometric_time_grid(16));
  CHECK(sv.status == Status::fail);
  CHECK(sv.witness.has_value());

  const PointSamples still(linear_system(Matrix::Zero(2, 2)), {Vector::Ones(2)});
  CHECK(finite_time_domination(coordinate_split(2, {0}, {1}), still, geometric_time_grid(16)).status == Status::fail);

  Matrix rot(2, 2);
  rot << 0, -1, 1, 0;
  const PointSamples turning(linear_system(rot), {Vector::Ones(2)});
  CHECK(finite_time_domination(coordinate_split(2, {0}, {1}), turning, geometric_time_grid(4)).status ==
        Status::abstain);
}

TEST_CASE("bundle rates") {
  const SingularityRecord rec = refine_singularity(lorenz_field(), Vector::Zero(3));
  const Subspace e2 = rec.eigenspace(std::vector<double>{kLorenz2});
  const Subspace f13 = rec.eigenspace(std::vector<double>{kLorenz1, kLorenz3});
  const SplittingField origin_split = SplittingField::constant("origin", e2, f13);
  const PointSamples origin(std::make_shared<FlowSystem>(lorenz_field()), {Vector::Zero(3)});
  const Verdict uc = uniform_contraction(origin_split, origin, 20.0);
  CHECK(uc.status == Status::pass);
  CHECK(std::abs(*uc.exponent - kLorenz2) < 1e-3);
  const Verdict se = sectional_expansion(origin_split, origin, 20.0);
  CHECK(se.status == Status::pass);
  CHECK(std::abs(*se.exponent - (kLorenz1 + kLorenz3)) < 1e-3);
  CHECK(se.values.at("wedge_route_max_diff") < 1e-9);

  const PointSamples saddle(linear_system(diag({2, -1.5, -1})), {Vector::Ones(3)});
  const SplittingField s21 = coordinate_split(3, {2}, {0, 1});
  CHECK(*uniform_contraction(s21, saddle, 20.0).exponent == doctest::Approx(-1.0).epsilon(1e-9));
  const Verdict s21se = sectional_expansion(s21, saddle, 20.0);
  CHECK(*s21se.exponent == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(s21se.values.at("wedge_route_max_diff") < 1e-9);
  CHECK_THROWS_AS(sectional_expansion(coordinate_split(3, {0, 1}, {2}), saddle, 20.0), std::invalid_argument);

  Matrix rot = Matrix::Zero(3, 3);
  rot(0, 1) = -1;
  rot(1, 0) = 1;
  rot(2, 2) = -1;
  const PointSamples iso(linear_system(rot), {Vector::Ones(3)});
  const Verdict isov = sectional_expansion(coordinate_split(3, {2}, {0, 1}), iso, 20.0);
  CHECK(std::abs(*isov.exponent) < 1e-9);
  CHECK(isov.status == Status::fail);

  const PointSamples four(linear_system(diag({1.5, -2, -0.5, 1})), {Vector::Ones(4)});
  const Verdict sc = sectional_contraction(coordinate_split(4, {1, 3}, {0, 2}), four, 20.0);
  CHECK(sc.status == Status::pass);
  CHECK(*sc.exponent == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(sc.values.at("reversed_area_slope") == doctest::Approx(1.0).epsilon(1e-9));
  const PointSamples ident(linear_system(Matrix::Zero(4, 4)), {Vector::Ones(4)});
  CHECK(sectional_contraction(coordinate_split(4, {1, 3}, {0, 2}), ident, 20.0).status == Status::fail);

  // E = flow direction on a periodic orbit: neutral, never a pass
  const auto cycle = std::make_shared<FlowSystem>(limit_cycle());
  const SplittingField along = SplittingField::analytic("flow", 2, 1, [](const Vector& x) {
    return Splitting{Subspace::line(vec({-x(1), x(0)})), Subspace::line(x)};
  });
  const PointSamples on_cycle(cycle, {vec({1, 0}), vec({0, 1})});
  const Verdict neutral = uniform_contraction(along, on_cycle, 20.0);
  CHECK(std::abs(*neutral.exponent) < 1e-3);
  CHECK(neutral.status == Status::fail);
}

TEST_CASE("flow direction lies in F") {
  const auto sink = linear_system(diag({-1, -2}));
  const PointSamples pts(sink, {vec({0, 1}), vec({1, 1})});
  const SplittingField e_has_flow = coordinate_split(2, {1}, {0});
  const Verdict c = uniform_contraction(e_has_flow, pts, 10.0);
  REQUIRE(c.status == Status::pass);
  const Verdict r = flow_in_F_residual(e_has_flow, pts, c);
  CHECK(r.status == Status::fail);
  CHECK(r.values.at("residual") == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(r.witness.has_value());
  CHECK((r.witness->point - vec({0, 1})).norm() == 0.0);

  Verdict not_contracted = c;
  not_contracted.status = Status::fail;
  CHECK(flow_in_F_residual(e_has_flow, pts, not_contracted).status == Status::abstain);

  const auto susp = suspend(marked_fixed_points("p", {{"p", Vector::Zero(2), diag({0.5, 2})}}));
  const PointSamples fixed(susp, {vec({0, 0})});
  const SplittingField sf =
      SplittingField::constant("susp", Subspace::coordinate(3, {0}), Subspace::coordinate(3, {1, 2}));
  const Verdict sc = uniform_contraction(sf, fixed, 10.0);
  REQUIRE(sc.status == Status::pass);
  const Verdict sr = flow_in_F_residual(sf, fixed, sc);
  CHECK(sr.status == Status::pass);
  CHECK(sr.values.at("residual") == 0.0);

  const PointSamples singular_only(sink, {Vector::Zero(2)});
  CHECK(flow_in_F_residual(e_has_flow, singular_only, c).status == Status::not_applicable);
}

TEST_CASE("Lyapunov spectra") {
  const LyapunovSpectrum lin = lyapunov_spectrum(LinearFlowSystem(diag({1, -2})), vec({1, 1}), 100.0);
  REQUIRE(lin.exponents.size() == 2);
  CHECK(std::abs(lin.exponents[0] - 1.0) < 1e-6);
  CHECK(std::abs(lin.exponents[1] + 2.0) < 1e-6);
  CHECK(lin.converged);

  Matrix cat(2, 2);
  cat << 2, 1, 1, 1;
  const LyapunovSpectrum cs = lyapunov_spectrum(DiscreteSystem(torus_automorphism("cat", cat)), vec({0.1, 0.3}), 200);
  const double golden = std::log((3.0 + std::sqrt(5.0)) / 2.0);
  CHECK(std::abs(cs.exponents[0] - golden) < 1e-9);
  CHECK(std::abs(cs.exponents[1] + golden) < 1e-9);

  // regular periodic orbit: the flow direction gives a zero exponent
  const LyapunovSpectrum lc = lyapunov_spectrum(FlowSystem(limit_cycle()), vec({1, 0}), 200.0);
  CHECK(std::abs(lc.exponents[0]) < 2e-3);
  CHECK(std::abs(lc.exponents[1] + 2.0) < 2e-3);

  // Liouville and reversal duality along a Lorenz orbit; the two directions
  // fit different windows, so the span must beat finite-time fluctuations
  const Vector x0 = integrate(lorenz_field(), vec({1, 1, 20}), 20.0).final_state();
  const CocycleSegment seg = variational_cocycle(lorenz_field(), x0, 3000.0);
  const LyapunovSpectrum fw = lyapunov_spectrum(seg);
  REQUIRE(fw.divergence_average.has_value());
  double sum = 0.0;
  for (double x : fw.exponents) sum += x;
  CHECK(std::abs(sum - *fw.divergence_average) < 1e-3);
  CHECK(*fw.divergence_average == doctest::Approx(-(10.0 + 1.0 + 8.0 / 3.0)).epsilon(1e-9));
  CHECK(std::abs(fw.exponents[1]) < 2e-3);
  const LyapunovSpectrum bw = lyapunov_spectrum(seg.reversed());
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(bw.exponents[i] + fw.exponents[2 - i]) < 2e-3);

  // reversed field at an equilibrium
  Matrix a(3, 3);
  a << 0.5, 1.0, 0.0, 0.0, -0.3, 0.2, 0.1, 0.0, -1.2;
  const LyapunovSpectrum lf = lyapunov_spectrum(FlowSystem(linear_field(a)), Vector::Zero(3), 100.0);
  const LyapunovSpectrum lb = lyapunov_spectrum(FlowSystem(linear_field(a).reversed()), Vector::Zero(3), 100.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(lb.exponents[i] + lf.exponents[2 - i]) < 2e-3);

  const Verdict v = lyapunov_verdict(lin);
  CHECK(v.status == Status::pass);
  CHECK(*v.exponent == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("sectional Lyapunov exponents") {
  const CocycleSegment seg = LinearFlowSystem(diag({3, 2, 1})).segment(Vector::Ones(3), 30.0);
  std::vector<double> se = sectional_lyapunov_exponents(seg, Subspace::full(3));
  REQUIRE(se.size() == 3);
  std::sort(se.rbegin(), se.rend());
  CHECK(se[0] == doctest::Approx(5.0).epsilon(1e-9));
  CHECK(se[1] == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(se[2] == doctest::Approx(3.0).epsilon(1e-9));
  const auto plane = sectional_lyapunov_exponents(seg, Subspace::coordinate(3, {0, 2}));
  REQUIRE(plane.size() == 1);
  CHECK(plane[0] == doctest::Approx(4.0).epsilon(1e-9));

  // pairwise sums on the Lorenz F bundle
  const auto& d = lorenz_data();
  for (std::size_t i0 : {10, 20}) {
    const CocycleSegment piece = d.trajectory->slice(i0, i0 + 40);
    const Subspace f = d.split.at(piece.start_point()).f;
    std::vector<double> sec = sectional_lyapunov_exponents(piece, f);
    const std::vector<double> sub = subspace_lyapunov_exponents(piece, f);
    REQUIRE(sub.size() == 2);
    REQUIRE(sec.size() == 1);
    CHECK(std::abs(sec[0] - (sub[0] + sub[1])) < 5e-3);
  }
}

TEST_CASE("subadditivity") {
  const auto diagonal = linear_system(diag({0.7, -0.4, -1.3}));
  const PointSamples pts(diagonal, {Vector::Ones(3)});
  const SplittingField split = coordinate_split(3, {2}, {0, 1});
  const std::vector<TimePair> pairs{{1, 1}, {1, 3}, {2, 5}};
  for (Family fam : {Family::phi, Family::psi}) {
    const Verdict v = subadditivity_check(fam, split, pts, pairs);
    CHECK(v.status == Status::pass);
    CHECK(v.values.at("violations") == 0.0);
    for (const auto& p : pairs) {
      const CocycleSegment seg = pts.segment(0, p.s + p.t);
      const std::size_t js = *seg.index_at(p.s);
      const double gap = family_value(fam, split, seg, false) - family_value(fam, split, seg.slice(0, js), false) -
                         family_value(fam, split, seg.slice(js, seg.size()), false);
      CHECK(std::abs(gap) < 1e-9);
    }
  }
  CHECK(*subadditivity_check(Family::phi, split, pts, pairs).exponent == doctest::Approx(-0.65).epsilon(1e-9));

  // non-invariant control
  const auto alt = std::make_shared<AlternatingSystem>();
  const PointSamples alt_pts(alt, {vec({0})});
  const Verdict bad = subadditivity_check(Family::phi, coordinate_split(2, {0}, {1}), alt_pts, {{1, 1}});
  CHECK(bad.status == Status::fail);
  CHECK(bad.values.at("violations") >= 1.0);
  REQUIRE(bad.witness.has_value());
  CHECK(bad.witness->value == doctest::Approx(std::log(100.0)).epsilon(1e-9));
  CHECK(!bad.notes.empty());

  // Lorenz estimated splitting
  const auto& d = lorenz_data();
  std::vector<std::size_t> sub(d.indices.begin(), d.indices.begin() + 5);
  const OrbitSamples orbit(d.trajectory, sub);
  for (Family fam : {Family::phi, Family::psi}) {
    CHECK(subadditivity_check(fam, d.split, orbit, {{1, 1}, {2, 3}, {4, 4}}).status == Status::pass);
  }
}

TEST_CASE("finite-time accumulation of contracted vectors") {
  // dominated variant of the linear saddle: E = strongest contraction
  const Matrix a = diag({2, -1.5, -1});
  const Subspace e = Subspace::coordinate(3, {1});
  std::vector<double> offsets{0.0};
  for (int k = 0; k <= 48; ++k) offsets.push_back(std::pow(10.0, -12.0 + 0.25 * k));
  std::vector<double> worst;
  for (double tau : {5.0, 10.0, 20.0, 40.0}) {
    const double rate = -1.5 + 1.0 / tau;
    const Matrix m = expm(a, tau);
    double far = 0.0;
    for (double x : offsets) {
      for (double y : offsets) {
        for (double sx : {1.0, -1.0}) {
          const Vector v = vec({sx * x, 1.0, y}).normalized();
          if ((m * v).norm() <= std::exp(rate * tau)) {
            far = std::max(far, (v - e.projector() * v).norm());
          }
        }
      }
    }
    worst.push_back(far);
  }
  for (std::size_t i = 1; i < worst.size(); ++i) CHECK(worst[i] < worst[i - 1]);
  CHECK(worst.back() < 1e-6);
}

namespace {

struct Mode {
  double modulus;
  int group;  // conjugate pairs share a group; the flow direction is group -1
};

/// Enumerates every index k and keeps those where the k weakest modes form a
/// union of whole eigen-groups strictly below the rest; with a flow
/// direction, a contracted E or an expanded F may not contain it.
std::vector<IndexCandidate> enumerate_indices(const Matrix& d, bool suspended) {
  Eigen::EigenSolver<Matrix> es(d, false);
  std::vector<Mode> modes;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const auto z = es.eigenvalues()(i);
    // conjugates get the group of the member with positive imaginary part
    int group = static_cast<int>(i);
    for (Eigen::Index j = 0; j < i; ++j) {
      if (std::abs(es.eigenvalues()(j) - std::conj(z)) < 1e-9 && std::abs(z.imag()) > 1e-9) group = static_cast<int>(j);
    }
    modes.push_back({std::abs(z), group});
  }
  if (suspended) modes.push_back({1.0, -1});
  std::sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) { return a.modulus < b.modulus; });
  std::vector<IndexCandidate> out;
  for (std::size_t k = 1; k < modes.size(); ++k) {
    double e_max = 0.0, f_min = 1e300;
    for (std::size_t j = 0; j < modes.size(); ++j) (j < k ? e_max : f_min) = j < k ? std::max(e_max, modes[j].modulus)
                                                                                    : std::min(f_min, modes[j].modulus);
    if (!(e_max < f_min)) continue;
    IndexCandidate c{static_cast<int>(k), std::nullopt};
    if (suspended) {
      bool in_e = false;
      for (std::size_t j = 0; j < k; ++j) in_e = in_e || modes[j].group == -1;
      if (in_e && e_max < 1.0) continue;
      if (!in_e && f_min > 1.0) continue;
      c.flow_in_e = in_e;
    }
    out.push_back(c);
  }
  return out;
}

std::vector<IndexCandidate> intersect(const std::vector<std::vector<IndexCandidate>>& sets) {
  std::vector<IndexCandidate> common = sets.front();
  for (const auto& s : sets) {
    std::erase_if(common, [&](const IndexCandidate& c) { return std::find(s.begin(), s.end(), c) == s.end(); });
  }
  return common;
}

}  // namespace

TEST_CASE("dominated splitting index feasibility") {
  const double th = 0.9;
  Matrix p = Matrix::Zero(4, 4);
  p(0, 0) = 0.5;
  p(1, 1) = 0.4;
  p.bottomRightCorner(2, 2) << 2 * std::cos(th), -2 * std::sin(th), 2 * std::sin(th), 2 * std::cos(th);
  const FeasibilityResult single = domination_index_feasibility({{"p", p}}, false);
  const auto& feas = single.points.front().feasible;
  CHECK(std::find(feas.begin(), feas.end(), IndexCandidate{3, std::nullopt}) == feas.end());
  CHECK(std::find(feas.begin(), feas.end(), IndexCandidate{2, std::nullopt}) != feas.end());
  CHECK(feas == enumerate_indices(p, false));

  // two points alone leave the weak indices feasible; the obstruction needs
  // the full set of marked points
  const Matrix q = diag({0.5, 0.4, 0.3, 3});
  const FeasibilityResult two = domination_index_feasibility({{"p", p}, {"q", q}}, true);
  const auto expected = intersect({enumerate_indices(p, true), enumerate_indices(q, true)});
  CHECK(two.common == expected);
  CHECK(expected == std::vector<IndexCandidate>{{1, false}, {2, false}});

  const FeasibilityResult hyp = domination_index_feasibility({{"h", diag({0.5, 2})}}, false);
  REQUIRE(hyp.common.size() == 1);
  CHECK(hyp.common.front().index == 1);
  CHECK(hyp.verdict.status == Status::pass);

  // conjugate-pair rule on both sides of the splitting kills every index
  Matrix pt = Matrix::Zero(4, 4);
  pt.topLeftCorner(2, 2) << 0.5 * std::cos(th), -0.5 * std::sin(th), 0.5 * std::sin(th), 0.5 * std::cos(th);
  pt(2, 2) = 2;
  pt(3, 3) = 3;
  const Matrix qu = diag({0.5, 2, 2.5, 3});
  const FeasibilityResult all = domination_index_feasibility({{"p", p}, {"pt", pt}, {"q", qu}, {"qt", q}}, true);
  const auto oracle_all = intersect({enumerate_indices(p, true), enumerate_indices(pt, true),
                                     enumerate_indices(qu, true), enumerate_indices(q, true)});
  CHECK(oracle_all.empty());
  CHECK(all.common.empty());
  CHECK(all.verdict.status == Status::fail);
  const FeasibilityResult base = domination_index_feasibility({{"p", p}, {"pt", pt}, {"q", qu}, {"qt", q}}, false);
  CHECK(base.common == std::vector<IndexCandidate>{{2, std::nullopt}});
}
