#include "splitdom/cocycle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace splitdom {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kMaxWedgeDim = 8;

double log_abs_det_lu(const Matrix& m) {
  Eigen::FullPivLU<Matrix> lu(m);
  double s = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) s += std::log(std::abs(lu.matrixLU()(i, i)));
  return s;
}

// Inverse of a normalized map, or empty when it is singular to working
// precision.
Matrix safe_inverse(const Matrix& m) {
  Eigen::FullPivLU<Matrix> lu(m);
  lu.setThreshold(1e-14);
  if (!lu.isInvertible()) return {};
  return lu.inverse();
}

double normalize(Matrix& m) {
  const double nrm = m.cwiseAbs().maxCoeff();
  if (!(nrm > 0.0) || !std::isfinite(nrm)) return nrm > 0.0 ? std::log(nrm) : kNegInf;
  m /= nrm;
  return std::log(nrm);
}

double top_singular(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return singular_values(m)(0);
}

}  // namespace

// ----------------------------------------------------------------- Factor

Factor Factor::from_matrix(const Matrix& a) {
  if (a.rows() != a.cols()) throw CocycleError("cocycle factor must be square");
  const double nrm = a.norm();
  if (!(nrm > 0.0) || !std::isfinite(nrm)) throw CocycleError("cocycle factor is zero or non-finite");
  Factor f;
  f.map = a / nrm;
  f.log_scale = std::log(nrm);
  Matrix inv = safe_inverse(f.map);
  if (inv.size() > 0) f.inverse = std::move(inv);
  return f;
}

Factor Factor::from_pair(const Matrix& a, const Matrix& a_inv) {
  if (a.rows() != a.cols() || a_inv.rows() != a.rows() || a_inv.cols() != a.cols()) {
    throw CocycleError("cocycle factor pair has mismatched shapes");
  }
  const double nrm = a.norm();
  if (!(nrm > 0.0) || !std::isfinite(nrm)) throw CocycleError("cocycle factor is zero or non-finite");
  Factor f;
  f.map = a / nrm;
  f.inverse = a_inv * nrm;
  f.log_scale = std::log(nrm);
  return f;
}

Matrix Factor::value() const { return std::exp(log_scale) * map; }

Matrix Factor::inverse_value() const {
  if (!invertible()) throw CocycleError("non-invertible cocycle factor");
  return std::exp(-log_scale) * inverse;
}

Matrix LogScaledMatrix::value() const { return std::exp(log_scale) * matrix; }

// --------------------------------------------------------- CocycleSegment

CocycleSegment::CocycleSegment(int dim, std::vector<double> times, std::vector<Vector> points,
                               std::vector<Factor> factors)
    : dim_(dim), times_(std::move(times)), points_(std::move(points)), factors_(std::move(factors)) {
  if (dim_ < 1) throw CocycleError("cocycle dimension must be positive");
  if (times_.size() != factors_.size() + 1 || points_.size() != times_.size()) {
    throw CocycleError("cocycle segment needs one more base point than factors");
  }
  for (std::size_t i = 0; i + 1 < times_.size(); ++i) {
    if (!(times_[i + 1] >= times_[i])) throw CocycleError("cocycle segment times must be nondecreasing");
  }
  for (const auto& f : factors_) {
    if (f.map.rows() != dim_ || f.map.cols() != dim_) throw CocycleError("factor dimensions do not chain");
    if (f.invertible() && (f.inverse.rows() != dim_ || f.inverse.cols() != dim_)) {
      throw CocycleError("factor inverse has wrong shape");
    }
  }
}

CocycleSegment CocycleSegment::identity(int dim, const Vector& point, double time) {
  return CocycleSegment(dim, {time}, {point}, {});
}

std::optional<double> CocycleSegment::liouville_log_det() const {
  if (liouville_.size() != factors_.size() || factors_.empty()) {
    if (factors_.empty()) return 0.0;
    return std::nullopt;
  }
  return std::accumulate(liouville_.begin(), liouville_.end(), 0.0);
}

void CocycleSegment::set_liouville(std::vector<double> per_factor) {
  if (per_factor.size() != factors_.size()) throw CocycleError("one divergence integral per factor expected");
  liouville_ = std::move(per_factor);
}

CocycleSegment CocycleSegment::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > factors_.size()) throw CocycleError("cocycle slice out of range");
  CocycleSegment s(dim_, std::vector<double>(times_.begin() + begin, times_.begin() + end + 1),
                   std::vector<Vector>(points_.begin() + begin, points_.begin() + end + 1),
                   std::vector<Factor>(factors_.begin() + begin, factors_.begin() + end));
  if (liouville_.size() == factors_.size()) {
    s.liouville_.assign(liouville_.begin() + begin, liouville_.begin() + end);
  }
  return s;
}

std::optional<std::size_t> CocycleSegment::index_at(double time) const {
  const double tol = 1e-9 * std::max(1.0, std::abs(time));
  auto it = std::lower_bound(times_.begin(), times_.end(), time - tol);
  if (it != times_.end() && std::abs(*it - time) <= tol) return static_cast<std::size_t>(it - times_.begin());
  return std::nullopt;
}

std::size_t CocycleSegment::index_after(double elapsed) const {
  const double target = start_time() + elapsed;
  const double tol = 1e-9 * std::max(1.0, std::abs(target));
  auto it = std::lower_bound(times_.begin(), times_.end(), target - tol);
  if (it == times_.end()) throw CocycleError("requested time lies beyond the cocycle segment");
  return static_cast<std::size_t>(it - times_.begin());
}

CocycleSegment CocycleSegment::reversed() const {
  const std::size_t m = factors_.size();
  std::vector<double> t(m + 1);
  std::vector<Vector> p(m + 1);
  std::vector<Factor> f;
  f.reserve(m);
  for (std::size_t i = 0; i <= m; ++i) {
    t[i] = times_.back() - times_[m - i];
    p[i] = points_[m - i];
  }
  for (std::size_t i = 0; i < m; ++i) {
    const Factor& src = factors_[m - 1 - i];
    if (!src.invertible()) throw CocycleError("non-invertible factor in reversed cocycle");
    Factor r;
    r.map = src.inverse;
    r.inverse = src.map;
    r.log_scale = -src.log_scale;
    f.push_back(std::move(r));
  }
  CocycleSegment out(dim_, std::move(t), std::move(p), std::move(f));
  if (liouville_.size() == m) {
    out.liouville_.resize(m);
    for (std::size_t i = 0; i < m; ++i) out.liouville_[i] = -liouville_[m - 1 - i];
  }
  return out;
}

CocycleSegment CocycleSegment::concat(const CocycleSegment& next) const {
  if (next.dim_ != dim_) throw CocycleError("cannot concatenate cocycles of different dimension");
  std::vector<double> t = times_;
  std::vector<Vector> p = points_;
  std::vector<Factor> f = factors_;
  const double shift = times_.back() - next.times_.front();
  for (std::size_t i = 1; i < next.times_.size(); ++i) {
    t.push_back(next.times_[i] + shift);
    p.push_back(next.points_[i]);
  }
  f.insert(f.end(), next.factors_.begin(), next.factors_.end());
  CocycleSegment out(dim_, std::move(t), std::move(p), std::move(f));
  if (liouville_.size() == factors_.size() && next.liouville_.size() == next.factors_.size()) {
    out.liouville_ = liouville_;
    out.liouville_.insert(out.liouville_.end(), next.liouville_.begin(), next.liouville_.end());
  }
  return out;
}

LogScaledMatrix CocycleSegment::product() const {
  LogScaledMatrix p{Matrix::Identity(dim_, dim_), 0.0};
  for (const auto& f : factors_) {
    p.matrix = f.map * p.matrix;
    p.log_scale += f.log_scale + normalize(p.matrix);
  }
  return p;
}

LogScaledMatrix CocycleSegment::inverse_product() const {
  LogScaledMatrix p{Matrix::Identity(dim_, dim_), 0.0};
  for (const auto& f : factors_) {
    if (!f.invertible()) throw CocycleError("non-invertible factor in inverse product");
    p.matrix = p.matrix * f.inverse;
    p.log_scale += -f.log_scale + normalize(p.matrix);
  }
  return p;
}

double CocycleSegment::log_abs_det() const {
  double s = 0.0;
  for (const auto& f : factors_) s += dim_ * f.log_scale + log_abs_det_lu(f.map);
  return s;
}

// ------------------------------------------------------- FrameAccumulator

FrameAccumulator::FrameAccumulator(const Matrix& orthonormal_frame)
    : q_(orthonormal_frame), log_diag_(Vector::Zero(orthonormal_frame.cols())) {
  const Eigen::Index k = q_.cols();
  if (k < 1 || q_.rows() < k) throw CocycleError("frame must have 1 <= k <= n columns");
  t_ = Matrix::Identity(k, k);
  if (k >= 2 && k <= kMaxWedgeDim) w_ = Matrix::Identity(choose2(static_cast<int>(k)), choose2(static_cast<int>(k)));
}

void FrameAccumulator::apply(const Matrix& a, double log_scale) {
  const Eigen::Index n = q_.rows();
  const Eigen::Index k = q_.cols();
  if (a.rows() != n || a.cols() != n) throw CocycleError("map does not act on the frame's space");
  const Matrix w = a * q_;
  Eigen::HouseholderQR<Matrix> qr(w);
  Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  Matrix q = qr.householderQ() * Matrix::Identity(n, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    if (r(i, i) < 0.0) {
      r.row(i) *= -1.0;
      q.col(i) *= -1.0;
    }
  }
  q_ = std::move(q);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double l = std::log(r(i, i)) + log_scale;
    log_diag_(i) += l;
    log_det_ += l;
  }
  t_ = r * t_;
  t_scale_ += log_scale + normalize(t_);
  if (w_.size() > 0) {
    w_ = compound2(r) * w_;
    w_scale_ += 2.0 * log_scale + normalize(w_);
  }
  ++steps_;
}

double FrameAccumulator::log_norm() const { return std::log(top_singular(t_)) + t_scale_; }

double FrameAccumulator::log_top_two() const {
  const int k = dim();
  if (k < 2) throw CocycleError("2-plane quantities need a frame of dimension >= 2");
  if (k == 2) return log_det_;
  if (w_.size() > 0) return std::log(top_singular(w_)) + w_scale_;
  const Vector s = singular_values(t_);
  return std::log(s(0)) + std::log(s(1)) + 2.0 * t_scale_;
}

double FrameAccumulator::log_conorm() const {
  const int k = dim();
  if (!std::isfinite(log_det_)) return kNegInf;
  if (k == 1) return log_norm();
  if (k == 2) return log_det_ - log_norm();
  if (k == 3) return log_det_ - log_top_two();
  const Vector s = singular_values(t_);
  return std::log(s(k - 1)) + t_scale_;
}

double FrameAccumulator::log_min_two_plane() const {
  const int k = dim();
  if (k < 2) throw CocycleError("2-plane quantities need a frame of dimension >= 2");
  if (!std::isfinite(log_det_)) return kNegInf;
  if (k == 2) return log_det_;
  if (k == 3) return log_det_ - log_norm();
  if (k == 4) return log_det_ - log_top_two();
  const Vector s = singular_values(t_);
  return std::log(s(k - 1)) + std::log(s(k - 2)) + 2.0 * t_scale_;
}

FrameAccumulator push_frame(const CocycleSegment& seg, const Matrix& start, Direction dir) {
  if (start.rows() != seg.dim()) throw CocycleError("frame does not match the cocycle dimension");
  FrameAccumulator acc(orthonormalize(start));
  const auto& fs = seg.factors();
  if (dir == Direction::forward) {
    for (const auto& f : fs) acc.apply(f.map, f.log_scale);
  } else {
    for (auto it = fs.rbegin(); it != fs.rend(); ++it) {
      if (!it->invertible()) throw CocycleError("non-invertible derivative on a backward request");
      acc.apply(it->inverse, -it->log_scale);
    }
  }
  return acc;
}

// ------------------------------------------------------ RestrictedProduct

RestrictedProduct::RestrictedProduct(int k)
    : direct_(Matrix::Identity(k, k)), dual_(Matrix::Identity(k, k)) {}

void RestrictedProduct::apply(const Matrix& c, double log_scale, const Matrix& c_inv) {
  direct_.apply(c, log_scale);
  if (c_inv.size() == 0) {
    invertible_ = false;
    return;
  }
  if (invertible_) dual_.apply(c_inv.transpose(), -log_scale);
}

double RestrictedProduct::log_conorm() const {
  if (!invertible_) return kNegInf;
  return -dual_.log_norm();
}

double RestrictedProduct::log_min_two_plane() const {
  if (!invertible_) return kNegInf;
  return -dual_.log_top_two();
}

// ------------------------------------------------------------ flows

CocycleSegment from_variational(const VariationalResult& result) {
  const auto& fs = result.factors;
  if (fs.empty()) {
    const Vector& x0 = result.orbit.x0;
    return CocycleSegment::identity(static_cast<int>(x0.size()), x0, 0.0);
  }
  const int n = static_cast<int>(fs.front().phi.rows());
  std::vector<double> times{fs.front().t0};
  std::vector<Vector> points{fs.front().x0};
  std::vector<Factor> factors;
  std::vector<double> div;
  factors.reserve(fs.size());
  for (const auto& f : fs) {
    times.push_back(f.t1);
    points.push_back(f.x1);
    factors.push_back(Factor::from_pair(f.phi, f.phi_inv));
    div.push_back(f.divergence_integral);
  }
  CocycleSegment seg(n, std::move(times), std::move(points), std::move(factors));
  seg.set_liouville(std::move(div));
  return seg;
}

CocycleSegment variational_cocycle(const VectorField& field, const Vector& x0, double T,
                                   const VariationalOptions& opts) {
  return from_variational(variational(field, x0, T, opts));
}

FlowSystem::FlowSystem(VectorField field, VariationalOptions opts)
    : field_(std::move(field)), opts_(std::move(opts)) {}

CocycleSegment FlowSystem::segment(const Vector& x, double t) const {
  return variational_cocycle(field_, x, t, opts_);
}

LinearFlowSystem::LinearFlowSystem(Matrix a, std::string name, double step)
    : a_(std::move(a)), name_(std::move(name)), step_(step) {
  if (a_.rows() != a_.cols() || a_.rows() == 0) throw CocycleError("linear flow needs a square matrix");
  if (!(step_ > 0.0)) throw CocycleError("linear flow step must be positive");
}

CocycleSegment LinearFlowSystem::segment(const Vector& x, double t) const {
  if (!(t >= 0.0)) throw CocycleError("cocycle time must be nonnegative");
  const int n = dim();
  if (x.size() != n) throw CocycleError("base point has wrong dimension");
  std::vector<double> times{0.0};
  std::vector<Vector> points{x};
  std::vector<Factor> factors;
  const auto pieces = static_cast<std::size_t>(std::ceil(t / step_ - 1e-12));
  const Matrix e_full = expm(a_, step_);
  const Matrix e_full_inv = expm(a_, -step_);
  for (std::size_t i = 0; i < pieces; ++i) {
    const double t0 = times.back();
    const double t1 = std::min(t, static_cast<double>(i + 1) * step_);
    const double dt = t1 - t0;
    const bool full = std::abs(dt - step_) <= 1e-12 * step_;
    factors.push_back(full ? Factor::from_pair(e_full, e_full_inv) : Factor::from_pair(expm(a_, dt), expm(a_, -dt)));
    times.push_back(t1);
    points.push_back(expm(a_, t1) * x);
  }
  return CocycleSegment(n, std::move(times), std::move(points), std::move(factors));
}

// --------------------------------------------------------- discrete maps

void DiscreteSystemSpec::validate() const {
  if (state_dim < 1 || fiber_dim < 1) throw CocycleError(name + ": dimensions must be positive");
  if (!map || !derivative) throw CocycleError(name + ": map and derivative evaluators are required");
  for (const auto& mp : marked_points) {
    if (mp.point.size() != state_dim) throw CocycleError(name + ": marked point " + mp.name + " has wrong dimension");
    if (mp.derivative.rows() != fiber_dim || mp.derivative.cols() != fiber_dim) {
      throw CocycleError(name + ": marked derivative at " + mp.name + " has wrong shape");
    }
    const Vector image = map(mp.point);
    if ((image - mp.point).norm() > 1e-12 * (1.0 + mp.point.norm())) continue;  // periodic, not fixed
    const Matrix d = derivative(mp.point);
    if (relative_difference(d, mp.derivative) > 1e-12) {
      throw CocycleError(name + ": derivative at marked fixed point " + mp.name + " differs from the declared matrix");
    }
  }
}

DiscreteSystemSpec marked_fixed_points(std::string name, std::vector<MarkedPoint> points) {
  if (points.empty()) throw CocycleError("marked point system needs at least one point");
  const int n = static_cast<int>(points.front().derivative.rows());
  auto table = std::make_shared<std::vector<Matrix>>();
  for (std::size_t i = 0; i < points.size(); ++i) {
    points[i].point = Vector::Constant(1, static_cast<double>(i));
    table->push_back(points[i].derivative);
  }
  DiscreteSystemSpec spec;
  spec.name = std::move(name);
  spec.state_dim = 1;
  spec.fiber_dim = n;
  spec.map = [](const Vector& x) { return x; };
  spec.inverse_map = [](const Vector& x) { return x; };
  spec.derivative = [table](const Vector& x) -> Matrix {
    const auto i = static_cast<long>(std::llround(x(0)));
    if (i < 0 || i >= static_cast<long>(table->size())) throw CocycleError("unknown marked point index");
    return (*table)[static_cast<std::size_t>(i)];
  };
  spec.marked_points = std::move(points);
  spec.validate();
  return spec;
}

DiscreteSystemSpec torus_automorphism(std::string name, const Matrix& a) {
  if (a.rows() != a.cols()) throw CocycleError("torus automorphism needs a square matrix");
  if ((a.array() - a.array().round()).abs().maxCoeff() > 0.0) throw CocycleError("torus automorphism must be integer");
  const double det = a.determinant();
  if (std::abs(std::abs(det) - 1.0) > 1e-12) throw CocycleError("torus automorphism must have determinant +-1");
  const Matrix inv = a.inverse().array().round().matrix();
  auto wrap = [](Vector y) {
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) -= std::floor(y(i));
    return y;
  };
  DiscreteSystemSpec spec;
  spec.name = std::move(name);
  spec.state_dim = static_cast<int>(a.rows());
  spec.fiber_dim = static_cast<int>(a.rows());
  spec.map = [a, wrap](const Vector& x) { return wrap(a * x); };
  spec.inverse_map = [inv, wrap](const Vector& x) { return wrap(inv * x); };
  spec.derivative = [a](const Vector&) { return a; };
  MarkedPoint origin{"origin", Vector::Zero(a.rows()), a};
  spec.marked_points.push_back(origin);
  spec.validate();
  return spec;
}

DiscreteSystemSpec constant_cocycle_over(std::string name, const DiscreteSystemSpec& base,
                                         const Matrix& fiber_derivative) {
  if (fiber_derivative.rows() != fiber_derivative.cols()) throw CocycleError("fiber derivative must be square");
  DiscreteSystemSpec spec;
  spec.name = std::move(name);
  spec.state_dim = base.state_dim;
  spec.fiber_dim = static_cast<int>(fiber_derivative.rows());
  spec.map = base.map;
  spec.inverse_map = base.inverse_map;
  spec.derivative = [fiber_derivative](const Vector&) { return fiber_derivative; };
  for (const auto& mp : base.marked_points) spec.marked_points.push_back({mp.name, mp.point, fiber_derivative});
  spec.validate();
  return spec;
}

CocycleSegment discrete_power(const DiscreteSystemSpec& spec, const Vector& x0, int n) {
  if (x0.size() != spec.state_dim) throw CocycleError(spec.name + ": base point has wrong dimension");
  std::vector<double> times{0.0};
  std::vector<Vector> points{x0};
  std::vector<Factor> factors;
  const int steps = std::abs(n);
  factors.reserve(static_cast<std::size_t>(steps));
  if (n < 0 && !spec.inverse_map) throw CocycleError(spec.name + ": backward orbit requested but the map has no inverse");
  Vector x = x0;
  for (int i = 0; i < steps; ++i) {
    if (n > 0) {
      factors.push_back(Factor::from_matrix(spec.derivative(x)));
      x = spec.map(x);
    } else {
      // D(f^{-1})(x) = Df(f^{-1} x)^{-1}
      const Vector prev = spec.inverse_map(x);
      const Matrix d = spec.derivative(prev);
      const Matrix d_inv = safe_inverse(d / d.norm());
      if (d_inv.size() == 0) throw CocycleError(spec.name + ": non-invertible derivative on a backward request");
      factors.push_back(Factor::from_pair(d_inv / d.norm(), d));
      x = prev;
    }
    times.push_back(static_cast<double>(i + 1));
    points.push_back(x);
  }
  return CocycleSegment(spec.fiber_dim, std::move(times), std::move(points), std::move(factors));
}

DiscreteSystem::DiscreteSystem(DiscreteSystemSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

CocycleSegment DiscreteSystem::segment(const Vector& x, double t) const {
  const double r = std::round(t);
  if (!(t >= 0.0) || std::abs(t - r) > 1e-9) throw CocycleError(spec_.name + ": discrete time must be a nonnegative integer");
  return discrete_power(spec_, x, static_cast<int>(r));
}

// ------------------------------------------------------------ hybrid loops

void HybridLoopModel::validate() const {
  if (saddles.empty()) throw CocycleError("hybrid model needs at least one saddle block");
  const Eigen::Index n = saddles.front().rows();
  for (const auto& a : saddles) {
    if (a.rows() != n || a.cols() != n) throw CocycleError("saddle blocks must share one square shape");
  }
  for (const auto& c : connections) {
    if (c.rows() != n || c.cols() != n) throw CocycleError("connection map has wrong shape");
    if (safe_inverse(c / c.norm()).size() == 0) throw CocycleError("connection maps must be invertible");
  }
  if (!(connection_time > 0.0)) throw CocycleError("connection transit time must be positive");
}

namespace {

void append_passage(const HybridLoopModel& model, const Passage& p, double duration, bool with_connection,
                    double phase, std::vector<double>& times, std::vector<Vector>& points,
                    std::vector<Factor>& factors) {
  if (p.saddle >= model.saddles.size()) throw CocycleError("passage names an unknown saddle");
  const Matrix& a = model.saddles[p.saddle];
  const double total = p.duration + (p.connection ? model.connection_time : 0.0);
  if (duration > 0.0) {
    const auto pieces = static_cast<std::size_t>(std::ceil(duration - 1e-12));
    const double dt = duration / static_cast<double>(pieces);
    const Matrix e = expm(a, dt);
    const Matrix e_inv = expm(a, -dt);
    for (std::size_t i = 0; i < pieces; ++i) {
      factors.push_back(Factor::from_pair(e, e_inv));
      times.push_back(times.back() + dt);
      points.push_back(Vector::Constant(1, phase + dt * static_cast<double>(i + 1) / total));
    }
  }
  if (with_connection) {
    if (*p.connection >= model.connections.size()) throw CocycleError("passage names an unknown connection");
    factors.push_back(Factor::from_matrix(model.connections[*p.connection]));
    times.push_back(times.back() + model.connection_time);
    points.push_back(Vector::Constant(1, phase + 1.0));
  }
}

}  // namespace

CocycleSegment hybrid_word(const HybridLoopModel& model, const std::vector<Passage>& schedule) {
  model.validate();
  if (schedule.empty()) throw CocycleError("hybrid schedule must be nonempty");
  std::vector<double> times{0.0};
  std::vector<Vector> points{Vector::Zero(1)};
  std::vector<Factor> factors;
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    const Passage& p = schedule[k];
    if (!(p.duration > 0.0)) throw CocycleError("passage durations must be positive");
    append_passage(model, p, p.duration, p.connection.has_value(), static_cast<double>(k), times, points, factors);
  }
  return CocycleSegment(model.dim(), std::move(times), std::move(points), std::move(factors));
}

HybridSystem::HybridSystem(std::string name, HybridLoopModel model, std::vector<Passage> schedule)
    : name_(std::move(name)), model_(std::move(model)), schedule_(std::move(schedule)) {
  model_.validate();
  if (schedule_.empty()) throw CocycleError("hybrid schedule must be nonempty");
  for (const auto& p : schedule_) {
    if (!(p.duration > 0.0)) throw CocycleError("passage durations must be positive");
    if (p.saddle >= model_.saddles.size()) throw CocycleError("passage names an unknown saddle");
    if (p.connection && *p.connection >= model_.connections.size()) {
      throw CocycleError("passage names an unknown connection");
    }
  }
}

CocycleSegment HybridSystem::segment(const Vector& x, double t) const {
  if (x.size() != 1) throw CocycleError("hybrid base point is a schedule position");
  if (!(t >= 0.0)) throw CocycleError("cocycle time must be nonnegative");
  const double pos = x(0);
  if (std::abs(pos - std::round(pos)) > 1e-12 || pos < 0.0) {
    throw CocycleError("hybrid segments start at the beginning of a passage");
  }
  std::size_t k = static_cast<std::size_t>(std::llround(pos));
  std::vector<double> times{0.0};
  std::vector<Vector> points{x};
  std::vector<Factor> factors;
  double remaining = t;
  while (remaining > 1e-12) {
    const Passage& p = schedule_[k % schedule_.size()];
    const double d = std::min(p.duration, remaining);
    remaining -= d;
    bool conn = false;
    if (p.connection && d == p.duration && remaining > 1e-12) {
      // the connection map acts at the end of its transit; a partial transit
      // contributes the identity
      if (remaining + 1e-12 >= model_.connection_time) {
        conn = true;
      } else {
        append_passage(model_, p, d, false, static_cast<double>(k), times, points, factors);
        factors.push_back(Factor::from_pair(Matrix::Identity(dim(), dim()), Matrix::Identity(dim(), dim())));
        times.push_back(times.back() + remaining);
        points.push_back(Vector::Constant(1, static_cast<double>(k) + 1.0 - 1e-9));
        remaining = 0.0;
        break;
      }
    }
    append_passage(model_, p, d, conn, static_cast<double>(k), times, points, factors);
    if (conn) remaining -= model_.connection_time;
    ++k;
  }
  return CocycleSegment(dim(), std::move(times), std::move(points), std::move(factors));
}

// ------------------------------------------------------------ suspensions

SuspensionSystem::SuspensionSystem(DiscreteSystemSpec base) : base_(std::move(base)) {
  base_.validate();
  for (const auto& mp : base_.marked_points) {
    if (safe_inverse(mp.derivative / mp.derivative.norm()).size() == 0) {
      throw CocycleError(base_.name + ": suspension needs invertible derivatives at marked points");
    }
  }
}

CocycleSegment SuspensionSystem::segment(const Vector& x, double t) const {
  const int nb = base_.state_dim;
  const int n = dim();
  if (x.size() != nb + 1) throw CocycleError("suspension base point has wrong dimension");
  if (!(t >= 0.0)) throw CocycleError("cocycle time must be nonnegative");
  const double s0 = x(nb);
  if (!(s0 >= 0.0 && s0 < 1.0)) throw CocycleError("suspension height must lie in [0, 1)");
  std::vector<double> times{0.0};
  std::vector<Vector> points{x};
  std::vector<Factor> factors;
  Vector base = x.head(nb);
  double elapsed = 0.0;
  double next_crossing = 1.0 - s0;
  while (next_crossing <= t + 1e-12) {
    Matrix d = Matrix::Identity(n, n);
    d.topLeftCorner(n - 1, n - 1) = base_.derivative(base);
    factors.push_back(Factor::from_matrix(d));
    base = base_.map(base);
    elapsed = next_crossing;
    Vector p(nb + 1);
    p << base, 0.0;
    times.push_back(elapsed);
    points.push_back(p);
    next_crossing += 1.0;
  }
  if (t - elapsed > 1e-12) {
    factors.push_back(Factor::from_pair(Matrix::Identity(n, n), Matrix::Identity(n, n)));
    Vector p(nb + 1);
    p << base, points.back()(nb) + (t - elapsed);
    times.push_back(t);
    points.push_back(p);
  }
  return CocycleSegment(n, std::move(times), std::move(points), std::move(factors));
}

std::optional<Vector> SuspensionSystem::flow_direction(const Vector&) const {
  Vector v = Vector::Zero(dim());
  v(dim() - 1) = 1.0;
  return v;
}

Subspace SuspensionSystem::flow_line() const { return Subspace::coordinate(dim(), {dim() - 1}); }

std::shared_ptr<SuspensionSystem> suspend(const DiscreteSystemSpec& spec) {
  return std::make_shared<SuspensionSystem>(spec);
}

}  // namespace splitdom
