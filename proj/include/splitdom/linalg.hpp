#pragma once

// Small dense linear algebra on top of Eigen: orthonormal subspaces,
// restricted norms and co-norms, oblique projections, second exterior
// powers and the matrix exponential.

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace splitdom {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class LinalgError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when E and F do not span the ambient space transversally.
class DegenerateSplitting : public LinalgError {
 public:
  DegenerateSplitting() : LinalgError("degenerate splitting") {}
};

/// Smallest singular value of the joint frame [E F] below which a pair of
/// subspaces is treated as non-transversal.
inline constexpr double kTransversalityTol = 1e-10;

/// A k-plane in n-space stored as an n x k matrix with orthonormal columns.
/// The frame is re-orthonormalized (modified Gram-Schmidt, two passes) on
/// every construction.
class Subspace {
 public:
  /// Columns of `spanning` must be linearly independent.
  explicit Subspace(const Matrix& spanning);

  static Subspace full(int n);
  /// span(e_i : i in axes), zero-based.
  static Subspace coordinate(int n, const std::vector<int>& axes);
  static Subspace line(const Vector& v);

  int ambient_dim() const { return static_cast<int>(frame_.rows()); }
  int dim() const { return static_cast<int>(frame_.cols()); }
  const Matrix& frame() const { return frame_; }

  /// Orthogonal projector onto the subspace.
  Matrix projector() const { return frame_ * frame_.transpose(); }
  Subspace orthogonal_complement() const;
  /// Throws LinalgError if the two subspaces intersect nontrivially.
  Subspace direct_sum(const Subspace& other) const;
  /// Image under an invertible-on-this-subspace map.
  Subspace image(const Matrix& a) const;
  bool contains(const Vector& v, double tol = 1e-10) const;

 private:
  struct Trusted {};
  Subspace(Matrix frame, Trusted) : frame_(std::move(frame)) {}

  Matrix frame_;
};

/// Modified Gram-Schmidt. Throws LinalgError when a column is dependent on
/// its predecessors (residual below `rank_tol` relative to its norm).
Matrix orthonormalize(const Matrix& spanning, double rank_tol = 1e-10);

Vector singular_values(const Matrix& a);

/// Largest singular value of A composed with the frame of S.
double restrict_norm(const Matrix& a, const Subspace& s);

/// Minimal norm m(L) = |L^{-1}|^{-1} of A restricted to S: the smallest
/// singular value of A * frame(S). Returns 0 when the restriction is singular
/// to working precision.
double conorm(const Matrix& a, const Subspace& s);
double conorm(const Matrix& a);

/// Projection onto E parallel to F.
Matrix oblique_projection(const Subspace& e, const Subspace& f);

/// sin of the splitting angle, 1 / |pi(E)|, with pi(E) the projection onto
/// E parallel to F. Throws DegenerateSplitting for non-transversal pairs.
double splitting_angle_sin(const Subspace& e, const Subspace& f);

/// Sine of the smallest principal angle between E and F (symmetric in E, F).
double min_principal_angle_sin(const Subspace& e, const Subspace& f);

/// Sine of the largest principal angle between two subspaces of equal
/// dimension; 0 iff they coincide.
double subspace_distance(const Subspace& a, const Subspace& b);

/// Number of pairs i < j among n indices.
inline int choose2(int n) { return n * (n - 1) / 2; }

/// Position of e_i ^ e_j (i < j) in the lexicographic basis of the second
/// exterior power of n-space.
int wedge_index(int i, int j, int n);

/// Second compound matrix of an m x k matrix: C(m,2) x C(k,2), entries are
/// the 2x2 minors in lexicographic row/column pair order. Valid for
/// rectangular input, so compound2(A * frame) represents the action of A on
/// the exterior square of a subspace.
Matrix compound2(const Matrix& a);

/// Matrix of the induced map on the second exterior power, for square A with
/// n >= 2.
Matrix wedge_square(const Matrix& a);

/// min over 2-planes L in F of |det(A|_L)|: the product of the two smallest
/// singular values of A restricted to F.
double min_two_plane_det(const Matrix& a, const Subspace& f);

/// e^{A t} via scaling and squaring with a Pade approximant.
Matrix expm(const Matrix& a, double t = 1.0);

/// Relative Frobenius-norm difference |a - b| / max(|b|, tiny).
double relative_difference(const Matrix& a, const Matrix& b);

}  // namespace splitdom
