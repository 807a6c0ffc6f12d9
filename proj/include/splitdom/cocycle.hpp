#pragma once

// Linear cocycles over orbits. Every source (ODE variational integration,
// products of map derivatives, hybrid saddle-passage words, suspensions) is
// reduced to a CocycleSegment: a chain of log-scaled factors along a sampled
// base path. Each factor carries its inverse so backward-time quantities
// never require inverting an ill-conditioned long product.

#include "splitdom/integrator.hpp"
#include "splitdom/linalg.hpp"
#include "splitdom/vector_field.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace splitdom {

class CocycleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One linear map of the chain: the actual map is exp(log_scale) * map and
/// its inverse is exp(-log_scale) * inverse. An empty inverse marks a
/// non-invertible factor.
struct Factor {
  Matrix map;
  Matrix inverse;
  double log_scale = 0.0;

  /// Normalizes `a` (Frobenius norm factored out) and inverts it when
  /// possible.
  static Factor from_matrix(const Matrix& a);
  /// Uses an independently computed inverse.
  static Factor from_pair(const Matrix& a, const Matrix& a_inv);

  bool invertible() const { return inverse.size() > 0; }
  Matrix value() const;
  Matrix inverse_value() const;
};

struct LogScaledMatrix {
  Matrix matrix;
  double log_scale = 0.0;
  Matrix value() const;
};

class CocycleSegment {
 public:
  /// times/points have one more entry than factors; factor i maps the fiber
  /// over points[i] to the fiber over points[i + 1].
  CocycleSegment(int dim, std::vector<double> times, std::vector<Vector> points,
                 std::vector<Factor> factors);

  static CocycleSegment identity(int dim, const Vector& point, double time = 0.0);

  int dim() const { return dim_; }
  std::size_t size() const { return factors_.size(); }
  bool empty() const { return factors_.empty(); }
  const std::vector<Factor>& factors() const { return factors_; }
  const std::vector<double>& times() const { return times_; }
  const std::vector<Vector>& points() const { return points_; }
  const Vector& start_point() const { return points_.front(); }
  const Vector& end_point() const { return points_.back(); }
  double start_time() const { return times_.front(); }
  double span() const { return times_.back() - times_.front(); }

  /// Factors [begin, end) with base points begin..end.
  CocycleSegment slice(std::size_t begin, std::size_t end) const;
  /// Index of the checkpoint at `time` (within 1e-9), or nullopt.
  std::optional<std::size_t> index_at(double time) const;
  /// First checkpoint index whose time reaches start_time() + elapsed.
  std::size_t index_after(double elapsed) const;

  /// The cocycle of the time-reversed dynamics along the same orbit: factor
  /// order reversed and each factor replaced by its inverse. Times restart
  /// at 0 and increase.
  CocycleSegment reversed() const;
  CocycleSegment concat(const CocycleSegment& next) const;

  /// Product of all factors, renormalized as it is accumulated.
  LogScaledMatrix product() const;
  /// Inverse of the product (requires invertible factors).
  LogScaledMatrix inverse_product() const;

  /// sum of log|det| of the factors.
  double log_abs_det() const;

  /// log det from the integrated divergence, for ODE segments.
  std::optional<double> liouville_log_det() const;
  /// Per-factor divergence integrals (one per factor).
  void set_liouville(std::vector<double> per_factor);

 private:
  int dim_;
  std::vector<double> times_;
  std::vector<Vector> points_;
  std::vector<Factor> factors_;
  std::vector<double> liouville_;  // empty when unavailable
};

/// Tracks the image of an n x k orthonormal frame under a chain of maps by
/// repeated QR: a_m ... a_1 Q_0 = Q_m T with T upper triangular. Keeps the
/// normalized triangular product, its second compound (2 <= k <= 8), and the
/// exact log|det| so the extreme singular values of the restricted product
/// stay accurate far beyond the range of a single double matrix.
class FrameAccumulator {
 public:
  explicit FrameAccumulator(const Matrix& orthonormal_frame);

  void apply(const Matrix& a, double log_scale = 0.0);

  int dim() const { return static_cast<int>(q_.cols()); }
  const Matrix& frame() const { return q_; }
  /// Cumulative sum of log R_ii per column (QR/treppen diagonal).
  const Vector& log_diagonal() const { return log_diag_; }
  std::size_t steps() const { return steps_; }

  double log_abs_det() const { return log_det_; }
  /// log of the largest singular value of the restricted product.
  double log_norm() const;
  /// log of the smallest singular value; -inf if singular.
  double log_conorm() const;
  /// log of sigma_1 * sigma_2 (largest 2-plane expansion); needs k >= 2.
  double log_top_two() const;
  /// log of sigma_{k-1} * sigma_k (smallest 2-plane expansion); needs k >= 2.
  double log_min_two_plane() const;
  /// The accumulated triangular product, exp(log_scale) * matrix.
  LogScaledMatrix triangular() const { return {t_, t_scale_}; }

 private:
  Matrix q_;
  Matrix t_;
  double t_scale_ = 0.0;
  Matrix w_;  // compound2 of T, tracked for 2 <= k <= 8
  double w_scale_ = 0.0;
  double log_det_ = 0.0;
  Vector log_diag_;
  std::size_t steps_ = 0;
};

/// Product P_m = C_m ... C_1 of k x k matrices given in fixed orthonormal
/// frames. The inverse-transpose chain C_m^{-T} ... C_1^{-T} = P_m^{-T} is
/// tracked alongside, so the co-norm and the smallest 2-plane determinant
/// come out as reciprocals of largest-growth quantities and stay accurate at
/// every prefix.
class RestrictedProduct {
 public:
  explicit RestrictedProduct(int k);

  /// Appends exp(log_scale) * c. `c_inv` (empty if unavailable) must be the
  /// inverse of c scaled as exp(-log_scale) * c_inv.
  void apply(const Matrix& c, double log_scale, const Matrix& c_inv);

  int dim() const { return direct_.dim(); }
  bool invertible() const { return invertible_; }
  std::size_t steps() const { return direct_.steps(); }
  double log_norm() const { return direct_.log_norm(); }
  double log_top_two() const { return direct_.log_top_two(); }
  double log_abs_det() const { return direct_.log_abs_det(); }
  /// -inf once a non-invertible factor was applied.
  double log_conorm() const;
  double log_min_two_plane() const;

 private:
  FrameAccumulator direct_;
  FrameAccumulator dual_;
  bool invertible_ = true;
};

enum class Direction { forward, backward };

/// Pushes `start` through the whole segment: forward starts at the base of
/// the segment and applies the maps; backward starts at its end and applies
/// the inverses in reverse order.
FrameAccumulator push_frame(const CocycleSegment& seg, const Matrix& start, Direction dir);

// ---------------------------------------------------------------- sources

/// Anything that can produce the cocycle over an orbit piece.
class CocycleSystem {
 public:
  virtual ~CocycleSystem() = default;
  virtual std::string name() const = 0;
  /// Fiber (tangent) dimension.
  virtual int dim() const = 0;
  virtual int state_dim() const = 0;
  /// Cocycle over the orbit of x for time t >= 0.
  virtual CocycleSegment segment(const Vector& x, double t) const = 0;
  /// Generator of the flow direction at x, for flows; nullopt otherwise.
  virtual std::optional<Vector> flow_direction(const Vector&) const { return std::nullopt; }
  virtual bool discrete_time() const { return false; }
};

/// Repackages variational output as a segment (normalized factors, Liouville
/// data attached).
CocycleSegment from_variational(const VariationalResult& result);

/// variational() + from_variational().
CocycleSegment variational_cocycle(const VectorField& field, const Vector& x0, double T,
                                   const VariationalOptions& opts = {});

class FlowSystem final : public CocycleSystem {
 public:
  explicit FlowSystem(VectorField field, VariationalOptions opts = {});
  std::string name() const override { return field_.name(); }
  int dim() const override { return field_.dim(); }
  int state_dim() const override { return field_.dim(); }
  CocycleSegment segment(const Vector& x, double t) const override;
  std::optional<Vector> flow_direction(const Vector& x) const override { return field_(x); }
  const VectorField& field() const { return field_; }
  const VariationalOptions& options() const { return opts_; }

 private:
  VectorField field_;
  VariationalOptions opts_;
};

/// Linear flow x' = Ax with exact factors e^{A dt} (no integration).
class LinearFlowSystem final : public CocycleSystem {
 public:
  explicit LinearFlowSystem(Matrix a, std::string name = "linear_flow", double step = 1.0);
  std::string name() const override { return name_; }
  int dim() const override { return static_cast<int>(a_.rows()); }
  int state_dim() const override { return dim(); }
  CocycleSegment segment(const Vector& x, double t) const override;
  std::optional<Vector> flow_direction(const Vector& x) const override { return a_ * x; }
  const Matrix& matrix() const { return a_; }

 private:
  Matrix a_;
  std::string name_;
  double step_;
};

/// A marked periodic point of a discrete system with its derivative.
struct MarkedPoint {
  std::string name;
  Vector point;
  Matrix derivative;
};

struct DiscreteSystemSpec {
  std::string name;
  int state_dim = 0;
  int fiber_dim = 0;
  std::function<Vector(const Vector&)> map;
  std::function<Vector(const Vector&)> inverse_map;  // optional
  std::function<Matrix(const Vector&)> derivative;
  std::vector<MarkedPoint> marked_points;

  /// Checks shapes and that the derivative matches at marked fixed points.
  void validate() const;
};

/// Finite set of marked fixed points; the state is the point index.
DiscreteSystemSpec marked_fixed_points(std::string name, std::vector<MarkedPoint> points);

/// Linear automorphism x -> A x mod 1 of the torus (A integer, det +-1);
/// derivative A everywhere.
DiscreteSystemSpec torus_automorphism(std::string name, const Matrix& a);

/// Constant fiber derivative over the base dynamics of `base`.
DiscreteSystemSpec constant_cocycle_over(std::string name, const DiscreteSystemSpec& base,
                                         const Matrix& fiber_derivative);

/// Ordered product of derivatives along the orbit of x0 for n steps; n < 0
/// walks the backward orbit with inverse derivatives.
CocycleSegment discrete_power(const DiscreteSystemSpec& spec, const Vector& x0, int n);

class DiscreteSystem final : public CocycleSystem {
 public:
  explicit DiscreteSystem(DiscreteSystemSpec spec);
  std::string name() const override { return spec_.name; }
  int dim() const override { return spec_.fiber_dim; }
  int state_dim() const override { return spec_.state_dim; }
  /// t must be a nonnegative integer.
  CocycleSegment segment(const Vector& x, double t) const override;
  bool discrete_time() const override { return true; }
  const DiscreteSystemSpec& spec() const { return spec_; }

 private:
  DiscreteSystemSpec spec_;
};

/// Saddle-passage model of homoclinic/heteroclinic loops: linear saddle
/// blocks alternate with connection maps of unit transit time.
struct HybridLoopModel {
  std::vector<Matrix> saddles;
  std::vector<Matrix> connections;
  double connection_time = 1.0;

  int dim() const { return saddles.empty() ? 0 : static_cast<int>(saddles.front().rows()); }
  void validate() const;
};

/// Time `duration` near saddle `saddle`, then (optionally) a connection.
struct Passage {
  std::size_t saddle = 0;
  double duration = 0.0;
  std::optional<std::size_t> connection;
};

/// Product ... C_{i2} e^{A tau_2} C_{i1} e^{A tau_1}. Passages are split into
/// pieces of at most one time unit.
CocycleSegment hybrid_word(const HybridLoopModel& model, const std::vector<Passage>& schedule);

/// Cyclic schedule as a dynamical system: the base point is [schedule
/// position]; segment(x, t) follows the schedule for time t.
class HybridSystem final : public CocycleSystem {
 public:
  HybridSystem(std::string name, HybridLoopModel model, std::vector<Passage> schedule);
  std::string name() const override { return name_; }
  int dim() const override { return model_.dim(); }
  int state_dim() const override { return 1; }
  CocycleSegment segment(const Vector& x, double t) const override;
  const HybridLoopModel& model() const { return model_; }

 private:
  std::string name_;
  HybridLoopModel model_;
  std::vector<Passage> schedule_;
};

/// Suspension flow with constant roof 1. State (base, s) with s in [0, 1);
/// fiber = base fiber + flow direction (last coordinate). Each roof crossing
/// contributes diag(Df(x), 1); fractional progress contributes the identity.
class SuspensionSystem final : public CocycleSystem {
 public:
  explicit SuspensionSystem(DiscreteSystemSpec base);
  std::string name() const override { return "suspension(" + base_.name + ")"; }
  int dim() const override { return base_.fiber_dim + 1; }
  int state_dim() const override { return base_.state_dim + 1; }
  CocycleSegment segment(const Vector& x, double t) const override;
  std::optional<Vector> flow_direction(const Vector& x) const override;
  const DiscreteSystemSpec& base() const { return base_; }
  /// Subspace spanned by the flow direction.
  Subspace flow_line() const;

 private:
  DiscreteSystemSpec base_;
};

std::shared_ptr<SuspensionSystem> suspend(const DiscreteSystemSpec& spec);

}  // namespace splitdom
