#include "splitdom/splitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <random>

namespace splitdom {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const Subspace& pick(const Splitting& s, Bundle b) { return b == Bundle::e ? s.e : s.f; }

Matrix inverse_or_empty(const Matrix& c) {
  Eigen::FullPivLU<Matrix> lu(c);
  lu.setThreshold(1e-14);
  if (!lu.isInvertible()) return {};
  return lu.inverse();
}

// Largest sine between a vector of range(image) and `target`; a collapsed
// image is trivially contained. Equals the principal-angle distance when the
// image has full rank.
double image_distance(const Matrix& image, const Subspace& target) {
  Eigen::JacobiSVD<Matrix> svd(image, Eigen::ComputeThinU);
  const Vector& sv = svd.singularValues();
  if (sv.size() == 0 || !(sv(0) > 0.0)) return 0.0;
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) > 1e-12 * sv(0)) ++rank;
  const Matrix u = svd.matrixU().leftCols(rank);
  const Matrix outside = u - target.frame() * (target.frame().transpose() * u);
  return std::min(1.0, singular_values(outside)(0));
}

void record(BundleSeries& s, double t, double ln, double lc, double ltt, double lmt, double ld) {
  s.times.push_back(t);
  s.log_norm.push_back(ln);
  s.log_conorm.push_back(lc);
  s.log_top_two.push_back(ltt);
  s.log_min_two_plane.push_back(lmt);
  s.log_det.push_back(ld);
}

Matrix random_frame(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) m(i, j) = normal(rng);
  }
  return orthonormalize(m);
}

struct WindowEstimate {
  Matrix frame;
  double log_gap = 0.0;
};

// Dominant k-dimensional subspace of the chain of factors [begin, end)
// (forward) or of its inverse (backward), from a fixed starting frame.
WindowEstimate window_estimate(const CocycleSegment& traj, std::size_t begin, std::size_t end, int k,
                               Direction dir, const Matrix& start) {
  FrameAccumulator acc(start);
  const auto& fs = traj.factors();
  if (dir == Direction::forward) {
    for (std::size_t i = begin; i < end; ++i) acc.apply(fs[i].map, fs[i].log_scale);
  } else {
    for (std::size_t i = end; i-- > begin;) {
      if (!fs[i].invertible()) throw CocycleError("non-invertible derivative on a backward request");
      acc.apply(fs[i].inverse, -fs[i].log_scale);
    }
  }
  const Vector& ld = acc.log_diagonal();
  return {acc.frame().leftCols(k), ld(k - 1) - ld(k)};
}

struct DirectionalEstimate {
  Matrix frame;
  std::size_t window = 0;
  double change = 0.0;
  double log_gap = 0.0;
};

DirectionalEstimate estimate_direction(const CocycleSegment& traj, std::size_t index, int k, Direction dir,
                                       const Matrix& start, const EstimateOptions& opts) {
  const std::size_t available = dir == Direction::forward ? index : traj.size() - index;
  auto bounds = [&](std::size_t w) {
    return dir == Direction::forward ? std::make_pair(index - w, index) : std::make_pair(index, index + w);
  };
  const double min_gap = std::log1p(opts.gap_tolerance);
  const char* side = dir == Direction::forward ? "F" : "E";
  if (opts.fixed_window) {
    const std::size_t w = *opts.fixed_window;
    if (w == 0 || w > available) {
      throw NoNumericalGap(std::string("insufficient trajectory for the ") + side + " window at checkpoint " +
                           std::to_string(index));
    }
    auto [b, e] = bounds(w);
    WindowEstimate est = window_estimate(traj, b, e, k, dir, start);
    if (!(est.log_gap > min_gap * static_cast<double>(w))) {
      throw NoNumericalGap(std::string("no numerical gap for ") + side + " at checkpoint " + std::to_string(index));
    }
    return {est.frame, w, 0.0, est.log_gap / static_cast<double>(w)};
  }
  const std::size_t max_w = std::min(opts.max_window, available);
  if (max_w < 2) {
    throw NoNumericalGap(std::string("insufficient trajectory for the ") + side + " window at checkpoint " +
                         std::to_string(index));
  }
  Matrix prev;
  double change = std::numeric_limits<double>::infinity();
  for (std::size_t w = 1; w <= max_w; ++w) {
    auto [b, e] = bounds(w);
    WindowEstimate est = window_estimate(traj, b, e, k, dir, start);
    if (w > 1) {
      change = subspace_distance(Subspace(est.frame), Subspace(prev));
      const bool gap = est.log_gap > min_gap * static_cast<double>(w);
      if (change < opts.tolerance && gap) return {est.frame, w, change, est.log_gap / static_cast<double>(w)};
    }
    prev = est.frame;
  }
  throw NoNumericalGap(std::string("no numerical gap for ") + side + " at checkpoint " + std::to_string(index) +
                       " (successive windows differ by " + std::to_string(change) + ")");
}

}  // namespace

std::string to_string(SplittingKind kind) {
  switch (kind) {
    case SplittingKind::analytic:
      return "analytic";
    case SplittingKind::constant:
      return "constant";
    case SplittingKind::estimated:
      return "estimated";
  }
  return "unknown";
}

SplittingField::SplittingField(std::string name, SplittingKind kind, int ambient_dim, int dim_e, Evaluator eval)
    : name_(std::move(name)), kind_(kind), ambient_(ambient_dim), dim_e_(dim_e), eval_(std::move(eval)) {
  if (ambient_ < 2 || dim_e_ < 1 || dim_e_ >= ambient_) {
    throw std::invalid_argument("splitting needs 1 <= dim E < ambient dimension");
  }
  if (!eval_) throw std::invalid_argument("splitting evaluator missing");
}

SplittingField SplittingField::constant(std::string name, const Subspace& e, const Subspace& f) {
  if (e.ambient_dim() != f.ambient_dim() || e.dim() + f.dim() != e.ambient_dim()) {
    throw std::invalid_argument("constant splitting dimensions do not add up");
  }
  Splitting s{e, f};
  return SplittingField(std::move(name), SplittingKind::constant, e.ambient_dim(), e.dim(),
                        [s](const Vector&) { return s; });
}

SplittingField SplittingField::analytic(std::string name, int ambient_dim, int dim_e, Evaluator eval) {
  return SplittingField(std::move(name), SplittingKind::analytic, ambient_dim, dim_e, std::move(eval));
}

Splitting SplittingField::at(const Vector& x) const {
  Splitting s = eval_(x);
  if (s.e.ambient_dim() != ambient_ || s.f.ambient_dim() != ambient_ || s.e.dim() != dim_e_ ||
      s.f.dim() != dim_f()) {
    throw std::invalid_argument(name_ + ": splitting dimensions are not constant");
  }
  if (min_principal_angle_sin(s.e, s.f) < kMinSplittingAngle) throw DegenerateSplitting();
  return s;
}

InvarianceResidual invariance_residual(const SplittingField& split, const CocycleSegment& seg) {
  InvarianceResidual r;
  if (seg.empty()) return r;
  const auto& fs = seg.factors();
  const auto& pts = seg.points();
  Splitting here = split.at(pts.front());
  for (std::size_t i = 0; i < fs.size(); ++i) {
    Splitting next = split.at(pts[i + 1]);
    double d = image_distance(fs[i].map * here.f.frame(), next.f);
    if (fs[i].invertible()) {
      d = std::max(d, image_distance(fs[i].inverse * next.e.frame(), here.e));
    } else {
      d = std::max(d, image_distance(fs[i].map * here.e.frame(), next.e));
    }
    if (d > r.value) {
      r.value = d;
      r.step = i;
    }
    here = std::move(next);
  }
  return r;
}

std::vector<RestrictedStep> restricted_steps(const SplittingField& split, const CocycleSegment& seg, Bundle which,
                                             std::optional<Direction> stable_route) {
  const Direction route = stable_route.value_or(which == Bundle::e ? Direction::backward : Direction::forward);
  std::vector<RestrictedStep> steps;
  steps.reserve(seg.size());
  const auto& fs = seg.factors();
  const auto& pts = seg.points();
  Matrix here = pick(split.at(pts.front()), which).frame();
  for (std::size_t i = 0; i < fs.size(); ++i) {
    Matrix next = pick(split.at(pts[i + 1]), which).frame();
    const Factor& f = fs[i];
    const Matrix d = route == Direction::backward && f.invertible() ? Matrix(here.transpose() * (f.inverse * next))
                                                                    : Matrix();
    const Matrix d_inv = d.size() > 0 ? inverse_or_empty(d) : Matrix();
    if (d_inv.size() > 0) {
      steps.push_back({d_inv, f.log_scale, d});
    } else {
      Matrix c = next.transpose() * (f.map * here);
      Matrix c_inv = inverse_or_empty(c);
      steps.push_back({std::move(c), f.log_scale, std::move(c_inv)});
    }
    here = std::move(next);
  }
  return steps;
}

BundleSeries bundle_series(const SplittingField& split, const CocycleSegment& seg, Bundle which,
                           std::optional<Direction> stable_route) {
  const int k = which == Bundle::e ? split.dim_e() : split.dim_f();
  BundleSeries s;
  const bool two = k >= 2;
  record(s, 0.0, 0.0, 0.0, two ? 0.0 : kNaN, two ? 0.0 : kNaN, 0.0);
  RestrictedProduct prod(k);
  const auto steps = restricted_steps(split, seg, which, stable_route);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    prod.apply(steps[i].c, steps[i].log_scale, steps[i].c_inv);
    record(s, seg.times()[i + 1] - seg.start_time(), prod.log_norm(), prod.log_conorm(),
           two ? prod.log_top_two() : kNaN, two ? prod.log_min_two_plane() : kNaN, prod.log_abs_det());
  }
  return s;
}

BundleSeries literal_bundle_series(const SplittingField& split, const CocycleSegment& seg, Bundle which) {
  const Matrix start = pick(split.at(seg.start_point()), which).frame();
  const int k = static_cast<int>(start.cols());
  BundleSeries s;
  const double two_init = k >= 2 ? 0.0 : kNaN;
  record(s, 0.0, 0.0, 0.0, two_init, two_init, 0.0);
  FrameAccumulator acc(start);
  const auto& fs = seg.factors();
  for (std::size_t i = 0; i < fs.size(); ++i) {
    acc.apply(fs[i].map, fs[i].log_scale);
    const bool two = k >= 2;
    record(s, seg.times()[i + 1] - seg.start_time(), acc.log_norm(), acc.log_conorm(),
           two ? acc.log_top_two() : kNaN, two ? acc.log_min_two_plane() : kNaN, acc.log_abs_det());
  }
  return s;
}

EstimatedSplitting estimate_splitting(const CocycleSegment& trajectory, int dim_e,
                                      const std::vector<std::size_t>& indices, const EstimateOptions& opts) {
  const int n = trajectory.dim();
  if (dim_e < 1 || dim_e >= n) throw std::invalid_argument("estimate_splitting needs 1 <= dim E < n");
  if (indices.empty()) throw std::invalid_argument("estimate_splitting needs at least one checkpoint");
  const Matrix start_f = random_frame(n, opts.seed);
  const Matrix start_e = random_frame(n, opts.seed ^ 0x9e3779b97f4a7c15ULL);

  auto table = std::make_shared<std::map<std::vector<double>, Splitting>>();
  std::vector<EstimateDiagnostics> diags;
  std::vector<Vector> points;
  for (std::size_t idx : indices) {
    if (idx >= trajectory.points().size()) throw std::out_of_range("checkpoint index beyond the trajectory");
    DirectionalEstimate f = estimate_direction(trajectory, idx, n - dim_e, Direction::forward, start_f, opts);
    DirectionalEstimate e = estimate_direction(trajectory, idx, dim_e, Direction::backward, start_e, opts);
    Subspace es(e.frame);
    Subspace fs(f.frame);
    if (min_principal_angle_sin(es, fs) < kMinSplittingAngle) throw DegenerateSplitting();
    const Vector& p = trajectory.points()[idx];
    table->insert_or_assign(std::vector<double>(p.data(), p.data() + p.size()), Splitting{es, fs});
    points.push_back(trajectory.points()[idx]);
    diags.push_back({idx, e.window, f.window, e.change, f.change, e.log_gap, f.log_gap});
  }
  auto lookup = [table](const Vector& x) -> Splitting {
    auto it = table->find(std::vector<double>(x.data(), x.data() + x.size()));
    if (it != table->end()) return it->second;
    for (const auto& [p, s] : *table) {
      if ((Eigen::Map<const Vector>(p.data(), static_cast<Eigen::Index>(p.size())) - x).norm() <=
          1e-12 * (1.0 + x.norm())) {
        return s;
      }
    }
    throw std::out_of_range("estimated splitting is not defined at the requested point");
  };
  SplittingField field("estimated", SplittingKind::estimated, n, dim_e, std::move(lookup));
  return {std::move(field), std::move(diags), std::move(points)};
}

AngleInfimum angle_infimum(const SplittingField& split, const std::vector<Vector>& samples) {
  if (samples.empty()) throw std::invalid_argument("angle_infimum needs a nonempty sample set");
  AngleInfimum a;
  a.value = std::numeric_limits<double>::infinity();
  a.symmetric_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Splitting s = split.at(samples[i]);
    const double v = splitting_angle_sin(s.e, s.f);
    if (v < a.value) {
      a.value = v;
      a.index = i;
    }
    a.symmetric_value = std::min(a.symmetric_value, min_principal_angle_sin(s.e, s.f));
  }
  return a;
}

SplittingVariation splitting_variation(const SplittingField& split, const std::vector<Vector>& samples) {
  SplittingVariation v;
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    const double dx = (samples[i + 1] - samples[i]).norm();
    if (!(dx > 0.0)) continue;
    const Splitting a = split.at(samples[i]);
    const Splitting b = split.at(samples[i + 1]);
    v.lipschitz_e = std::max(v.lipschitz_e, subspace_distance(a.e, b.e) / dx);
    v.lipschitz_f = std::max(v.lipschitz_f, subspace_distance(a.f, b.f) / dx);
    v.max_step = std::max(v.max_step, dx);
  }
  return v;
}

}  // namespace splitdom
