#pragma once

#include "splitdom/linalg.hpp"
#include "splitdom/vector_field.hpp"

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace splitdom {

using Complex = std::complex<double>;

class SingularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A cluster of equal eigenvalues (a real eigenvalue, or a conjugate pair
/// represented by the member with positive imaginary part) together with a
/// real frame of its generalized eigenspace.
struct EigenGroup {
  Complex value;
  int dimension = 0;       // real dimension of the generalized eigenspace
  bool defective = false;  // geometric < algebraic multiplicity
  Subspace space;
};

/// Hyperbolicity threshold on |Re lambda|.
inline constexpr double kHyperbolicTol = 1e-8;

struct SingularityRecord {
  Vector location;
  Matrix jacobian;
  std::vector<Complex> eigenvalues;  // sorted by decreasing real part
  std::vector<EigenGroup> groups;    // same order
  double residual = 0.0;             // |X(location)|
  bool hyperbolic = false;
  bool defective = false;
  std::optional<Subspace> stable;
  std::optional<Subspace> unstable;

  bool real_spectrum(double tol = 1e-10) const;

  /// Direct sum of the eigenspaces whose eigenvalues are nearest to the
  /// given targets (each target picks one group; conjugates pick the pair).
  Subspace eigenspace(const std::vector<Complex>& targets) const;
  Subspace eigenspace(const std::vector<double>& real_targets) const;
};

/// Eigen-decomposition of a Jacobian at a known equilibrium.
SingularityRecord analyze_equilibrium(const Matrix& jacobian, const Vector& location,
                                      double residual = 0.0);

struct RefineOptions {
  int max_iterations = 50;
  double target_residual = 1e-12;
  /// Guesses with |X(guess)| above this are rejected before Newton starts;
  /// a non-positive value disables the check.
  double basin_residual = 0.1;
};

/// Newton iteration on X from `guess`, then analyze_equilibrium.
SingularityRecord refine_singularity(const VectorField& field, const Vector& guess,
                                     const RefineOptions& opts = {});

struct LorenzLikeCheck {
  bool applicable = false;
  std::string reason;           // why not applicable
  double lambda1 = 0.0;         // expanding
  double lambda2 = 0.0;         // strong contracting
  double lambda3 = 0.0;         // weak contracting
  bool ordering = false;        // lambda2 < lambda3 < 0 < -lambda3 < lambda1
  bool area_expanding = false;  // lambda1 + lambda2 > 0
  bool holds() const { return applicable && ordering && area_expanding; }
};

LorenzLikeCheck is_lorenz_like(const SingularityRecord& rec);

}  // namespace splitdom
