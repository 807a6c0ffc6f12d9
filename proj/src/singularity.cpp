#include "splitdom/singularity.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace splitdom {

namespace {

constexpr double kClusterTol = 1e-6;

bool before(const Complex& a, const Complex& b) {
  if (a.real() != b.real()) return a.real() > b.real();
  return a.imag() > b.imag();
}

// Right null space of m with the given dimension: the trailing right
// singular vectors.
Matrix trailing_null_space(const Matrix& m, int dim) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  return svd.matrixV().rightCols(dim);
}

int numerical_nullity(const Matrix& m, double tol) {
  const Vector s = singular_values(m);
  int count = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) <= tol) ++count;
  }
  return count;
}

Matrix matrix_power(const Matrix& m, int p) {
  Matrix r = Matrix::Identity(m.rows(), m.cols());
  for (int i = 0; i < p; ++i) r = r * m;
  return r;
}

}  // namespace

bool SingularityRecord::real_spectrum(double tol) const {
  return std::all_of(eigenvalues.begin(), eigenvalues.end(),
                     [&](const Complex& z) { return std::abs(z.imag()) <= tol * std::max(1.0, std::abs(z)); });
}

Subspace SingularityRecord::eigenspace(const std::vector<Complex>& targets) const {
  if (targets.empty()) throw SingularityError("eigenspace selector is empty");
  std::vector<std::size_t> chosen;
  for (const Complex& target : targets) {
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const double d = std::min(std::abs(groups[g].value - target), std::abs(std::conj(groups[g].value) - target));
      if (d < best_dist) {
        best_dist = d;
        best = g;
      }
    }
    if (best_dist > 1e-6 * std::max(1.0, std::abs(target))) {
      throw SingularityError("no eigenvalue near the requested selector");
    }
    if (std::find(chosen.begin(), chosen.end(), best) != chosen.end()) {
      throw SingularityError("eigenspace selector names the same eigenvalue twice");
    }
    chosen.push_back(best);
  }
  Subspace s = groups[chosen.front()].space;
  for (std::size_t i = 1; i < chosen.size(); ++i) s = s.direct_sum(groups[chosen[i]].space);
  return s;
}

Subspace SingularityRecord::eigenspace(const std::vector<double>& real_targets) const {
  std::vector<Complex> t;
  t.reserve(real_targets.size());
  for (double v : real_targets) t.emplace_back(v, 0.0);
  return eigenspace(t);
}

SingularityRecord analyze_equilibrium(const Matrix& jacobian, const Vector& location, double residual) {
  if (jacobian.rows() != jacobian.cols() || jacobian.rows() == 0) {
    throw SingularityError("jacobian must be square and nonempty");
  }
  const int n = static_cast<int>(jacobian.rows());
  SingularityRecord rec;
  rec.location = location;
  rec.jacobian = jacobian;
  rec.residual = residual;

  Eigen::EigenSolver<Matrix> es(jacobian, false);
  if (es.info() != Eigen::Success) throw SingularityError("eigenvalue computation failed");
  for (int i = 0; i < n; ++i) rec.eigenvalues.push_back(es.eigenvalues()(i));
  std::sort(rec.eigenvalues.begin(), rec.eigenvalues.end(), before);

  const double scale = std::max(1.0, jacobian.norm());
  const double cluster_tol = kClusterTol * scale;
  std::vector<bool> used(rec.eigenvalues.size(), false);
  for (std::size_t i = 0; i < rec.eigenvalues.size(); ++i) {
    if (used[i]) continue;
    const Complex lead = rec.eigenvalues[i];
    const bool real = std::abs(lead.imag()) <= cluster_tol;
    if (!real && lead.imag() < 0) continue;  // represented by its conjugate
    // algebraic multiplicity within tolerance; conjugate members consumed too
    Complex sum = 0.0;
    int mult = 0;
    for (std::size_t j = i; j < rec.eigenvalues.size(); ++j) {
      const Complex z = rec.eigenvalues[j];
      if (real) {
        if (!used[j] && std::abs(z.imag()) <= cluster_tol && std::abs(z.real() - lead.real()) <= cluster_tol) {
          used[j] = true;
          sum += Complex(z.real(), 0.0);
          ++mult;
        }
      } else {
        if (!used[j] && std::abs(z - lead) <= cluster_tol) {
          used[j] = true;
          sum += z;
          ++mult;
        }
      }
    }
    if (!real) {
      for (std::size_t j = 0; j < rec.eigenvalues.size(); ++j) {
        if (!used[j] && std::abs(rec.eigenvalues[j] - std::conj(lead)) <= cluster_tol) used[j] = true;
      }
    }
    const Complex value = sum / static_cast<double>(mult);
    const Matrix id = Matrix::Identity(n, n);
    Matrix base;
    int dimension = 0;
    if (real) {
      base = jacobian - value.real() * id;
      dimension = mult;
    } else {
      base = jacobian * jacobian - 2.0 * value.real() * jacobian + std::norm(value) * id;
      dimension = 2 * mult;
    }
    const Matrix frame = trailing_null_space(matrix_power(base, mult), dimension);
    const double null_tol = 1e-6 * (real ? scale : scale * scale);
    const int geometric = numerical_nullity(base, null_tol);
    EigenGroup g{value, dimension, geometric < dimension, Subspace(frame)};
    rec.defective = rec.defective || g.defective;
    rec.groups.push_back(std::move(g));
  }
  // real parts sorted descending already; groups follow the lead order
  rec.hyperbolic = std::all_of(rec.eigenvalues.begin(), rec.eigenvalues.end(),
                               [](const Complex& z) { return std::abs(z.real()) > kHyperbolicTol; });

  std::optional<Subspace> st;
  std::optional<Subspace> un;
  for (const auto& g : rec.groups) {
    if (g.value.real() < -kHyperbolicTol) {
      st = st ? st->direct_sum(g.space) : g.space;
    } else if (g.value.real() > kHyperbolicTol) {
      un = un ? un->direct_sum(g.space) : g.space;
    }
  }
  rec.stable = st;
  rec.unstable = un;
  return rec;
}

SingularityRecord refine_singularity(const VectorField& field, const Vector& guess, const RefineOptions& opts) {
  if (guess.size() != field.dim()) throw SingularityError("guess has wrong dimension");
  Vector x = guess;
  double r = field(x).norm();
  if (opts.basin_residual > 0 && !(r < opts.basin_residual)) {
    throw SingularityError("guess outside the Newton basin (|X(guess)| = " + std::to_string(r) + ")");
  }
  for (int it = 0; it < opts.max_iterations && r > opts.target_residual; ++it) {
    const Matrix j = field.jacobian(x);
    Eigen::FullPivLU<Matrix> lu(j);
    if (!lu.isInvertible()) throw SingularityError("singular jacobian during Newton iteration");
    x -= lu.solve(field(x));
    r = field(x).norm();
    if (!std::isfinite(r)) throw SingularityError("Newton iteration diverged");
  }
  if (!(r < 1e-10)) throw SingularityError("Newton iteration did not converge (|X| = " + std::to_string(r) + ")");
  return analyze_equilibrium(field.jacobian(x), x, r);
}

LorenzLikeCheck is_lorenz_like(const SingularityRecord& rec) {
  LorenzLikeCheck c;
  if (rec.eigenvalues.size() != 3) {
    c.reason = "dimension is not 3";
    return c;
  }
  if (!rec.real_spectrum(1e-8)) {
    c.reason = "spectrum is not real";
    return c;
  }
  if (!rec.hyperbolic) {
    c.reason = "not hyperbolic";
    return c;
  }
  c.applicable = true;
  // eigenvalues sorted by decreasing real part
  c.lambda1 = rec.eigenvalues[0].real();
  c.lambda3 = rec.eigenvalues[1].real();
  c.lambda2 = rec.eigenvalues[2].real();
  c.ordering = c.lambda2 < c.lambda3 && c.lambda3 < 0.0 && 0.0 < -c.lambda3 && -c.lambda3 < c.lambda1;
  c.area_expanding = c.lambda1 + c.lambda2 > 0.0;
  return c;
}

}  // namespace splitdom
