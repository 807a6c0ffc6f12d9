#include "splitdom/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>

namespace splitdom {

Matrix orthonormalize(const Matrix& spanning, double rank_tol) {
  const Eigen::Index n = spanning.rows();
  const Eigen::Index k = spanning.cols();
  if (k == 0 || n == 0) throw LinalgError("empty frame");
  if (k > n) throw LinalgError("more spanning vectors than ambient dimension");
  if (!spanning.allFinite()) throw LinalgError("non-finite frame entry");
  Matrix q = spanning;
  for (Eigen::Index j = 0; j < k; ++j) {
    const double original = q.col(j).norm();
    if (original == 0.0) throw LinalgError("zero vector in frame");
    // two MGS passes keep the frame orthonormal to ~1e-15
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index i = 0; i < j; ++i) {
        q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
      }
    }
    const double residual = q.col(j).norm();
    if (residual <= rank_tol * original) {
      throw LinalgError("linearly dependent frame");
    }
    q.col(j) /= residual;
  }
  return q;
}

Subspace::Subspace(const Matrix& spanning) : frame_(orthonormalize(spanning)) {}

Subspace Subspace::full(int n) {
  return Subspace(Matrix::Identity(n, n), Trusted{});
}

Subspace Subspace::coordinate(int n, const std::vector<int>& axes) {
  Matrix m = Matrix::Zero(n, static_cast<Eigen::Index>(axes.size()));
  for (std::size_t c = 0; c < axes.size(); ++c) {
    if (axes[c] < 0 || axes[c] >= n) throw LinalgError("axis out of range");
    m(axes[c], static_cast<Eigen::Index>(c)) = 1.0;
  }
  return Subspace(m);
}

Subspace Subspace::line(const Vector& v) { return Subspace(Matrix(v)); }

Subspace Subspace::orthogonal_complement() const {
  const int n = ambient_dim();
  if (dim() == n) throw LinalgError("complement of the full space is trivial");
  Eigen::JacobiSVD<Matrix> svd(frame_, Eigen::ComputeFullU);
  return Subspace(Matrix(svd.matrixU().rightCols(n - dim())));
}

Subspace Subspace::direct_sum(const Subspace& other) const {
  if (other.ambient_dim() != ambient_dim()) {
    throw LinalgError("direct sum of subspaces in different ambient spaces");
  }
  Matrix joint(ambient_dim(), dim() + other.dim());
  joint << frame_, other.frame_;
  return Subspace(joint);
}

Subspace Subspace::image(const Matrix& a) const {
  if (a.cols() != ambient_dim()) throw LinalgError("dimension mismatch in image");
  return Subspace(Matrix(a * frame_));
}

bool Subspace::contains(const Vector& v, double tol) const {
  const double nv = v.norm();
  if (nv == 0.0) return true;
  return (v - frame_ * (frame_.transpose() * v)).norm() <= tol * nv;
}

Vector singular_values(const Matrix& a) {
  return Eigen::JacobiSVD<Matrix>(a).singularValues();
}

namespace {

Matrix restricted(const Matrix& a, const Subspace& s) {
  if (a.cols() != s.ambient_dim()) {
    throw LinalgError("dimension mismatch: map has " + std::to_string(a.cols()) +
                      " columns, subspace lives in " +
                      std::to_string(s.ambient_dim()) + "-space");
  }
  return a * s.frame();
}

}  // namespace

double restrict_norm(const Matrix& a, const Subspace& s) {
  return singular_values(restricted(a, s))(0);
}

double conorm(const Matrix& a, const Subspace& s) {
  const Vector sv = singular_values(restricted(a, s));
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  const double floor = static_cast<double>(a.rows()) *
                       std::numeric_limits<double>::epsilon() * smax;
  return smin <= floor ? 0.0 : smin;
}

double conorm(const Matrix& a) {
  if (a.rows() != a.cols()) throw LinalgError("conorm of a non-square map");
  return conorm(a, Subspace::full(static_cast<int>(a.cols())));
}

Matrix oblique_projection(const Subspace& e, const Subspace& f) {
  const int n = e.ambient_dim();
  if (f.ambient_dim() != n || e.dim() + f.dim() != n) {
    throw DegenerateSplitting();
  }
  Matrix joint(n, n);
  joint << e.frame(), f.frame();
  const Vector sv = singular_values(joint);
  if (sv(n - 1) < kTransversalityTol) throw DegenerateSplitting();
  // P = J diag(I_k, 0) J^{-1}
  const Matrix inv = joint.inverse();
  return e.frame() * inv.topRows(e.dim());
}

double splitting_angle_sin(const Subspace& e, const Subspace& f) {
  const Matrix p = oblique_projection(e, f);
  return std::min(1.0, 1.0 / singular_values(p)(0));
}

double min_principal_angle_sin(const Subspace& e, const Subspace& f) {
  if (e.ambient_dim() != f.ambient_dim()) throw LinalgError("dimension mismatch");
  const double cos_min = std::min(1.0, singular_values(e.frame().transpose() * f.frame())(0));
  return std::sqrt(std::max(0.0, 1.0 - cos_min * cos_min));
}

double subspace_distance(const Subspace& a, const Subspace& b) {
  if (a.ambient_dim() != b.ambient_dim() || a.dim() != b.dim()) {
    throw LinalgError("subspace distance needs equal dimensions");
  }
  // |(I - P_b) Q_a| = sin of the largest principal angle
  const Matrix residual = a.frame() - b.frame() * (b.frame().transpose() * a.frame());
  return std::min(1.0, singular_values(residual)(0));
}

int wedge_index(int i, int j, int n) {
  // rows (0,1),(0,2),...,(0,n-1),(1,2),...
  return i * n - i * (i + 1) / 2 + (j - i - 1);
}

Matrix compound2(const Matrix& a) {
  const int m = static_cast<int>(a.rows());
  const int k = static_cast<int>(a.cols());
  if (m < 2 || k < 2) throw LinalgError("second compound needs at least 2 rows and columns");
  Matrix c(choose2(m), choose2(k));
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      const int r = wedge_index(i, j, m);
      for (int p = 0; p < k; ++p) {
        for (int q = p + 1; q < k; ++q) {
          c(r, wedge_index(p, q, k)) = a(i, p) * a(j, q) - a(i, q) * a(j, p);
        }
      }
    }
  }
  return c;
}

Matrix wedge_square(const Matrix& a) {
  if (a.rows() != a.cols()) throw LinalgError("wedge_square needs a square map");
  if (a.rows() < 2) throw LinalgError("wedge_square needs dimension >= 2");
  return compound2(a);
}

double min_two_plane_det(const Matrix& a, const Subspace& f) {
  if (f.dim() < 2) throw LinalgError("min_two_plane_det needs dim F >= 2");
  const Vector sv = singular_values(restricted(a, f));
  const Eigen::Index k = sv.size();
  return sv(k - 1) * sv(k - 2);
}

Matrix expm(const Matrix& a, double t) {
  if (a.rows() != a.cols()) throw LinalgError("expm needs a square matrix");
  const Matrix at = a * t;
  return at.exp();
}

double relative_difference(const Matrix& a, const Matrix& b) {
  const double scale = std::max(b.norm(), std::numeric_limits<double>::min());
  return (a - b).norm() / scale;
}

}  // namespace splitdom
