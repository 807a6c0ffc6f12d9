#pragma once

// Verdict engine: each domination-type inequality as a sampled check with
// fitted rates, constants and witnesses.

#include "splitdom/cocycle.hpp"
#include "splitdom/samples.hpp"
#include "splitdom/singularity.hpp"
#include "splitdom/splitting.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace splitdom {

enum class Status { pass, fail, abstain, not_applicable };
std::string to_string(Status s);
std::optional<Status> parse_status(std::string_view s);

/// Slopes within this band of zero are neutral and never pass.
inline constexpr double kSlopeThreshold = 1e-3;
/// Invariance residual above which restricted quantities are meaningless.
inline constexpr double kInvarianceTol = 1e-3;
/// Fraction of the span dropped before fitting slopes.
inline constexpr double kTransientCut = 0.2;
/// Finite-time domination threshold on the quotient.
inline constexpr double kFiniteTimeThreshold = 0.5;
/// Slack allowed in subadditivity checks.
inline constexpr double kSubadditivityEps = 1e-5;

struct Witness {
  Vector point;
  double time = 0.0;
  double value = 0.0;
  std::string quantity;
};

/// One value of a tracked quantity, natural log scale.
struct SeriesPoint {
  double t = 0.0;
  std::string quantity;
  double value = 0.0;
};

struct Verdict {
  std::string criterion;
  Status status = Status::abstain;
  std::optional<double> exponent;
  std::optional<double> constant;
  std::optional<double> fit_residual;
  std::optional<Witness> witness;
  std::string samples;
  double span = 0.0;
  std::map<std::string, double> values;
  std::vector<std::string> notes;
  std::vector<SeriesPoint> series;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // rms of the fit residuals
  std::size_t count = 0;
};

/// Least-squares line through (t, y) over the points with
/// t >= t0 + cut * (t_max - t0).
LinearFit fit_slope(const std::vector<double>& t, const std::vector<double>& y, double cut = kTransientCut);

/// Smallest C with y_j <= log C + rate * t_j for all j, as log C.
double log_constant(const std::vector<double>& t, const std::vector<double>& y, double rate);

// ---------------------------------------------------------------- quotients

struct QuotientSeries {
  std::vector<double> times;
  std::vector<double> log_quotient;  // +inf where F's restriction is singular
  double residual = 0.0;             // invariance residual of the segment
  bool abstained = false;
};

/// log of |DX_t|E_x| * |DX_{-t}|F_{X_t x}| at every checkpoint.
QuotientSeries domination_quotient_series(const SplittingField& split, const CocycleSegment& seg);

/// log of the domination quotient over the whole segment; nullopt when the
/// splitting is not invariant within kInvarianceTol.
std::optional<double> domination_quotient(const SplittingField& split, const CocycleSegment& seg);

/// Fitted exponent of the domination quotient; passes iff dominated
/// (slope < -kSlopeThreshold at every sample).
Verdict domination_exponent(const SplittingField& split, const SampleSet& samples, double span);

/// First T in the grid with max over samples of the quotient below 1/2.
Verdict finite_time_domination(const SplittingField& split, const SampleSet& samples,
                               const std::vector<double>& time_grid);

/// {0.25 * 2^k : 0.25 * 2^k <= t_max}.
std::vector<double> geometric_time_grid(double t_max);

// ------------------------------------------------------------ bundle rates

Verdict uniform_contraction(const SplittingField& split, const SampleSet& samples, double span);

/// Area growth of 2-planes in the bundle (default F); dim < 2 throws
/// std::invalid_argument("sectional expansion undefined").
Verdict sectional_expansion(const SplittingField& split, const SampleSet& samples, double span,
                            Bundle which = Bundle::f);

/// Area contraction of 2-planes in the bundle (default E), via expansion
/// under the reversed cocycle. The reported exponent is the forward area
/// slope.
Verdict sectional_contraction(const SplittingField& split, const SampleSet& samples, double span,
                              Bundle which = Bundle::e);

// ------------------------------------------------------------- singularities

/// maxRe spec(A|E) - minRe spec(A|F) from the eigenvalues of the restricted
/// Jacobian; passes iff negative. Throws std::invalid_argument when E or F is
/// not A-invariant (residual above 1e-8).
Verdict singularity_domination(const SingularityRecord& rec, const Subspace& e, const Subspace& f);

/// Eigenvalue route for the bundle rates at a singularity, same invariance
/// requirement as singularity_domination. Contraction: max Re spec(A|E).
Verdict singularity_contraction(const SingularityRecord& rec, const Subspace& e);
/// Sum of the two smallest real parts of spec(A|F); dim F >= 2.
Verdict singularity_sectional_expansion(const SingularityRecord& rec, const Subspace& f);
/// Sum of the two largest real parts of spec(A|E); dim E >= 2.
Verdict singularity_sectional_contraction(const SingularityRecord& rec, const Subspace& e);

/// max over regular samples of |pi(E_x) X(x)| / |X(x)|, with pi(E) the
/// projection onto E along F. Abstains unless `contraction` passed.
Verdict flow_in_F_residual(const SplittingField& split, const SampleSet& samples, const Verdict& contraction,
                           double threshold = 1e-6);

// ---------------------------------------------------------------- exponents

struct LyapunovSpectrum {
  std::vector<double> exponents;  // descending
  Vector base_point;
  double span = 0.0;
  bool converged = false;
  double convergence_change = 0.0;  // max change between half-span and full-span fits
  double fit_residual = 0.0;
  std::optional<double> divergence_average;  // Liouville data when available
  std::vector<double> history_times;
  std::vector<std::vector<double>> history;  // running time averages per exponent
};

/// QR (Benettin) iteration along the segment, one re-orthonormalization per
/// factor; exponents are least-squares slopes of the accumulated log
/// diagonal.
LyapunovSpectrum lyapunov_spectrum(const CocycleSegment& seg);
LyapunovSpectrum lyapunov_spectrum(const CocycleSystem& system, const Vector& x0, double T);

/// Verdict view of a spectrum: exponent = top exponent, passes iff it is
/// positive beyond kSlopeThreshold; running averages become series.
Verdict lyapunov_verdict(const LyapunovSpectrum& ls);

/// All C(k, 2) exponents of the second exterior power restricted to F_x.
std::vector<double> sectional_lyapunov_exponents(const CocycleSegment& seg, const Subspace& f);
std::vector<double> sectional_lyapunov_exponents(const CocycleSystem& system, const SplittingField& split,
                                                 const Vector& x0, double T);

/// Lyapunov exponents of the cocycle restricted to the (invariant) subspace
/// F_x, descending.
std::vector<double> subspace_lyapunov_exponents(const CocycleSegment& seg, const Subspace& f);

// ------------------------------------------------------------- subadditivity

enum class Family { phi, psi };
std::string to_string(Family f);

/// f_t over a segment piece: phi = log|DX_t|E_x|, psi = log|wedge2 DX_{-t}|F_{X_t x}|.
/// `literal` selects the direct push route instead of the restricted chain.
double family_value(Family family, const SplittingField& split, const CocycleSegment& seg, bool literal);

struct TimePair {
  double s = 0.0;
  double t = 0.0;
};

/// Checks f_{t+s}(x) <= f_s(x) + f_t(X_s x) + eps on every sample and pair,
/// and fits the bound exp(f_t) <= C exp(lambda t / 2).
Verdict subadditivity_check(Family family, const SplittingField& split, const SampleSet& samples,
                            const std::vector<TimePair>& pairs, double eps = kSubadditivityEps);

// ------------------------------------------------------- index feasibility

struct MarkedDerivative {
  std::string name;
  Matrix derivative;
};

struct IndexCandidate {
  int index = 0;                   // dim E
  std::optional<bool> flow_in_e;   // suspensions only
  bool operator==(const IndexCandidate& o) const { return index == o.index && flow_in_e == o.flow_in_e; }
};

struct PointFeasibility {
  std::string name;
  std::vector<double> moduli;  // ascending, flow direction included when suspended
  std::vector<IndexCandidate> feasible;
  std::vector<std::string> rejected;  // reason per rejected index
};

struct FeasibilityResult {
  std::vector<PointFeasibility> points;
  std::vector<IndexCandidate> common;
  Verdict verdict;
};

/// Spectral feasibility of a dominated splitting of each index at marked
/// fixed points: a modulus gap that does not cut a conjugate pair, and for
/// suspensions a consistent side for the neutral flow direction.
FeasibilityResult domination_index_feasibility(const std::vector<MarkedDerivative>& points, bool suspended);

}  // namespace splitdom
