#pragma once

// Candidate invariant splittings E + F over sampled base points, and the
// bundle-restricted growth quantities every criterion is built from.

#include "splitdom/cocycle.hpp"
#include "splitdom/linalg.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace splitdom {

struct Splitting {
  Subspace e;
  Subspace f;
};

enum class SplittingKind { analytic, constant, estimated };
std::string to_string(SplittingKind kind);

/// Smallest admissible sine of the angle between E_x and F_x.
inline constexpr double kMinSplittingAngle = 1e-8;

class SplittingField {
 public:
  using Evaluator = std::function<Splitting(const Vector& x)>;

  SplittingField(std::string name, SplittingKind kind, int ambient_dim, int dim_e, Evaluator eval);

  static SplittingField constant(std::string name, const Subspace& e, const Subspace& f);
  static SplittingField analytic(std::string name, int ambient_dim, int dim_e, Evaluator eval);

  /// Evaluates and validates dimensions and transversality; throws
  /// DegenerateSplitting below kMinSplittingAngle.
  Splitting at(const Vector& x) const;

  const std::string& name() const { return name_; }
  SplittingKind kind() const { return kind_; }
  int ambient_dim() const { return ambient_; }
  int dim_e() const { return dim_e_; }
  int dim_f() const { return ambient_ - dim_e_; }

 private:
  std::string name_;
  SplittingKind kind_;
  int ambient_;
  int dim_e_;
  Evaluator eval_;
};

struct InvarianceResidual {
  double value = 0.0;     // max principal-angle distance over the segment
  std::size_t step = 0;   // factor index attaining it
};

/// Step-by-step invariance defect: for each factor A_i between checkpoints
/// x_i and x_{i+1}, the distances between A_i F_{x_i} and F_{x_{i+1}} and
/// between A_i^{-1} E_{x_{i+1}} and E_{x_i} (the well-conditioned direction
/// for each bundle). Invariance over every step is invariance over the
/// segment.
InvarianceResidual invariance_residual(const SplittingField& split, const CocycleSegment& seg);

enum class Bundle { e, f };

/// Growth quantities of DX_t restricted to one bundle, at every checkpoint
/// of a segment (index 0 is t = 0). Entries are natural logs; the two-plane
/// columns are NaN when the bundle is 1-dimensional.
struct BundleSeries {
  std::vector<double> times;  // elapsed time from the segment start
  std::vector<double> log_norm;
  std::vector<double> log_conorm;
  std::vector<double> log_top_two;
  std::vector<double> log_min_two_plane;
  std::vector<double> log_det;
};

/// One step of the cocycle expressed in bundle frames at consecutive
/// checkpoints: exp(log_scale) * c, with c_inv (possibly empty) its inverse
/// scaled by exp(-log_scale).
struct RestrictedStep {
  Matrix c;
  double log_scale = 0.0;
  Matrix c_inv;
};

/// Restricted-chain steps. Each step is computed in the time direction in
/// which the bundle is stable (by default forward for F, backward for E) so
/// contamination from the complementary bundle decays instead of growing.
std::vector<RestrictedStep> restricted_steps(const SplittingField& split, const CocycleSegment& seg, Bundle which,
                                             std::optional<Direction> stable_route = std::nullopt);

/// Restricted-chain route: the k x k chain of restricted_steps accumulated
/// together with its inverse transpose. Exact for invariant splittings; for
/// non-invariant ones it measures the projected cocycle.
BundleSeries bundle_series(const SplittingField& split, const CocycleSegment& seg, Bundle which,
                           std::optional<Direction> stable_route = std::nullopt);

/// Literal route: pushes the bundle at the segment start forward through all
/// factors. Needs no splitting data beyond the start point but loses
/// accuracy for bundles that are not dominating in forward time.
BundleSeries literal_bundle_series(const SplittingField& split, const CocycleSegment& seg, Bundle which);

class NoNumericalGap : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EstimateOptions {
  std::size_t max_window = 40;          // factors per power-iteration window
  std::optional<std::size_t> fixed_window;
  double tolerance = 1e-7;              // successive-window principal angle
  double gap_tolerance = 1e-6;          // adjacent growth ratio must exceed 1 + this
  std::uint64_t seed = 1;
};

struct EstimateDiagnostics {
  std::size_t index = 0;        // checkpoint index in the trajectory
  std::size_t window_e = 0;
  std::size_t window_f = 0;
  double change_e = 0.0;        // last successive-window distance
  double change_f = 0.0;
  double log_gap_e = 0.0;       // per-window log ratio at the index boundary
  double log_gap_f = 0.0;
};

struct EstimatedSplitting {
  SplittingField field;
  std::vector<EstimateDiagnostics> diagnostics;
  std::vector<Vector> points;
};

/// Power iteration on one long trajectory: F at checkpoint i is the dominant
/// dim F subspace of the cocycle over [i - W, i] applied to a random frame,
/// E the dominant dim E subspace of the backward cocycle over [i, i + W].
/// The resulting field is defined exactly at the chosen checkpoints.
EstimatedSplitting estimate_splitting(const CocycleSegment& trajectory, int dim_e,
                                      const std::vector<std::size_t>& indices,
                                      const EstimateOptions& opts = {});

struct AngleInfimum {
  double value = 0.0;             // min sin of the splitting angle, 1 / |pi(E)|
  double symmetric_value = 0.0;   // min sin of the smallest principal angle
  std::size_t index = 0;          // arg-min sample
};

AngleInfimum angle_infimum(const SplittingField& split, const std::vector<Vector>& samples);

/// Lipschitz-type variation of the field between consecutive samples.
struct SplittingVariation {
  double lipschitz_e = 0.0;
  double lipschitz_f = 0.0;
  double max_step = 0.0;  // largest |x - x'| among the pairs used
};

SplittingVariation splitting_variation(const SplittingField& split, const std::vector<Vector>& samples);

}  // namespace splitdom
