#pragma once

// Independent reference computations used as test oracles. Nothing here
// calls into the library under test beyond its value types.

#include "splitdom/linalg.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace oracle {

using splitdom::Matrix;
using splitdom::Vector;

inline Matrix gaussian(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

inline Matrix orthonormal_columns(const Matrix& m) {
  Eigen::HouseholderQR<Matrix> qr(m);
  return qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
}

inline Matrix random_orthogonal(std::mt19937_64& rng, int n) { return orthonormal_columns(gaussian(rng, n, n)); }

/// A = S diag(d) S^{-1} with real spectrum and a well-conditioned S.
struct Diagonalizable {
  Matrix a;
  Matrix s;
  Vector d;
};

inline Diagonalizable random_diagonalizable(std::mt19937_64& rng, int n, double norm_bound) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (;;) {
    Matrix s = gaussian(rng, n, n);
    Eigen::JacobiSVD<Matrix> svd(s);
    const Vector sv = svd.singularValues();
    if (sv(n - 1) < 0.2 * sv(0)) continue;
    Vector d(n);
    for (int i = 0; i < n; ++i) d(i) = u(rng);
    Matrix a = s * d.asDiagonal() * s.inverse();
    const double scale = norm_bound / a.norm() * (0.5 + 0.5 * std::abs(u(rng)));
    return {a * scale, s, d * scale};
  }
}

/// e^{At} from the eigen-decomposition A = S diag(d) S^{-1}.
inline Matrix expm_diag(const Diagonalizable& m, double t) {
  Vector e = (m.d * t).array().exp();
  return m.s * e.asDiagonal() * m.s.inverse();
}

/// Truncated Taylor series with scaling and squaring.
inline Matrix expm_taylor(const Matrix& a, double t) {
  Matrix x = a * t;
  int squarings = 0;
  while (x.norm() > 0.25) {
    x /= 2.0;
    ++squarings;
  }
  Matrix sum = Matrix::Identity(a.rows(), a.cols());
  Matrix term = sum;
  for (int k = 1; k < 30; ++k) {
    term = term * x / static_cast<double>(k);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

/// |det| of A restricted to the plane spanned by the orthonormal columns of p.
inline double plane_det(const Matrix& a, const Matrix& p) {
  const Matrix ap = a * p;
  return std::sqrt(std::abs((ap.transpose() * ap).determinant()));
}

/// Minimum of the area factor over 2-planes inside span(frame): `samples`
/// random planes, then a compass search around the best one.
inline double brute_min_two_plane_det(const Matrix& a, const Matrix& frame, std::mt19937_64& rng,
                                      int samples = 10000) {
  const int k = static_cast<int>(frame.cols());
  auto value = [&](const Matrix& w) { return plane_det(a, frame * w); };
  Matrix best = orthonormal_columns(gaussian(rng, k, 2));
  double best_v = value(best);
  for (int i = 1; i < samples; ++i) {
    Matrix w = orthonormal_columns(gaussian(rng, k, 2));
    const double v = value(w);
    if (v < best_v) {
      best_v = v;
      best = w;
    }
  }
  for (double h = 0.1; h > 1e-10;) {
    // directions: move either basis vector towards the complement of the plane
    const Matrix full = orthonormal_columns([&] {
      Matrix m(k, k);
      m << best, gaussian(rng, k, k - 2);
      return m;
    }());
    bool improved = false;
    for (int c = 0; c < 2 && !improved; ++c) {
      for (int j = 2; j < k && !improved; ++j) {
        for (double sign : {1.0, -1.0}) {
          Matrix w = best;
          w.col(c) += sign * h * full.col(j);
          w = orthonormal_columns(w);
          const double v = value(w);
          if (v < best_v) {
            best_v = v;
            best = w;
            improved = true;
            break;
          }
        }
      }
    }
    if (!improved) h /= 2.0;
  }
  return best_v;
}

/// All products s_i s_j, i < j, sorted descending.
inline std::vector<double> pairwise_products(const Vector& s) {
  std::vector<double> out;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    for (Eigen::Index j = i + 1; j < s.size(); ++j) out.push_back(s(i) * s(j));
  std::sort(out.rbegin(), out.rend());
  return out;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace oracle
