#include "splitdom/criteria.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace splitdom {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string tagged(const std::string& quantity, std::size_t sample) {
  return quantity + "#" + std::to_string(sample);
}

void append_series(Verdict& v, const std::string& quantity, std::size_t sample, const std::vector<double>& t,
                   const std::vector<double>& y) {
  const std::string name = tagged(quantity, sample);
  for (std::size_t j = 0; j < t.size(); ++j) v.series.push_back({t[j], name, y[j]});
}

bool all_finite(const std::vector<double>& y) {
  return std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); });
}

std::string format_number(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

// Per-sample slope of one tracked quantity and the aggregate worst case.
struct SampleFit {
  std::size_t sample = 0;
  LinearFit fit;
  double log_c = 0.0;
  double final_value = 0.0;
  bool finite = true;
};

Verdict make_verdict(const std::string& criterion, const SampleSet& samples, double span) {
  Verdict v;
  v.criterion = criterion;
  v.samples = samples.describe();
  v.span = span;
  return v;
}

SampleFit fit_sample(std::size_t i, const std::vector<double>& t, const std::vector<double>& y) {
  SampleFit s;
  s.sample = i;
  s.final_value = y.back();
  if (!all_finite(y)) {
    s.finite = false;
    return s;
  }
  s.fit = fit_slope(t, y);
  s.log_c = log_constant(t, y, s.fit.slope);
  return s;
}

// Decides a sign verdict. `want_negative` selects whether passing needs
// slope < -threshold or slope > +threshold; the worst sample is the one
// closest to failing.
void decide(Verdict& v, const std::vector<SampleFit>& fits, bool want_negative, const SampleSet& samples,
            const std::string& quantity) {
  const SampleFit* worst = nullptr;
  for (const auto& f : fits) {
    if (!worst) {
      worst = &f;
      continue;
    }
    if (!f.finite && worst->finite) {
      worst = &f;
      continue;
    }
    if (!f.finite || !worst->finite) continue;
    if (want_negative ? f.fit.slope > worst->fit.slope : f.fit.slope < worst->fit.slope) worst = &f;
  }
  double max_resid = 0.0;
  for (const auto& f : fits) max_resid = std::max(max_resid, f.finite ? f.fit.residual : 0.0);
  v.fit_residual = max_resid;
  if (!worst->finite) {
    v.status = Status::fail;
    v.exponent = want_negative ? kInf : -kInf;
    v.notes.push_back("singular restriction: the tracked quantity is not finite");
    v.witness = Witness{samples.point(worst->sample), v.span, worst->final_value, quantity};
    return;
  }
  const double slope = worst->fit.slope;
  v.exponent = slope;
  v.constant = std::exp(worst->log_c);
  const bool ok = want_negative ? slope < -kSlopeThreshold : slope > kSlopeThreshold;
  v.status = ok ? Status::pass : Status::fail;
  if (std::abs(slope) <= kSlopeThreshold) v.notes.push_back("neutral: slope within the threshold band");
  if (!ok) v.witness = Witness{samples.point(worst->sample), v.span, worst->final_value, quantity};
}

Verdict abstain_not_invariant(Verdict v, const SampleSet& samples, std::size_t i, double residual) {
  v.status = Status::abstain;
  v.notes.push_back("splitting not invariant within tolerance (residual " + format_number(residual) + ")");
  v.witness = Witness{samples.point(i), v.span, residual, "invariance_residual"};
  v.values["invariance_residual"] = residual;
  return v;
}

std::vector<double> real_parts(const Matrix& m) {
  Eigen::EigenSolver<Matrix> es(m, false);
  std::vector<double> r;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) r.push_back(es.eigenvalues()(i).real());
  return r;
}

double invariance_defect(const Matrix& a, const Subspace& s) {
  const Matrix img = a * s.frame();
  return (img - s.projector() * img).norm() / std::max(1.0, a.norm());
}

std::vector<double> column_slopes(const std::vector<double>& t, const std::vector<std::vector<double>>& cols,
                                  double t_limit, double* max_residual) {
  std::vector<double> tt;
  for (double x : t) {
    if (x <= t_limit * (1.0 + 1e-12)) tt.push_back(x);
  }
  std::vector<double> slopes;
  for (const auto& c : cols) {
    const std::vector<double> yy(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(tt.size()));
    const LinearFit f = fit_slope(tt, yy);
    slopes.push_back(f.slope);
    if (max_residual) *max_residual = std::max(*max_residual, f.residual);
  }
  return slopes;
}

std::vector<double> frame_exponents(const CocycleSegment& seg, const Matrix& frame, bool wedge) {
  FrameAccumulator acc(frame);
  const int k = acc.dim();
  std::vector<double> t{0.0};
  std::vector<std::vector<double>> cols(static_cast<std::size_t>(k), std::vector<double>{0.0});
  for (std::size_t i = 0; i < seg.size(); ++i) {
    const Factor& f = seg.factors()[i];
    if (wedge) {
      acc.apply(compound2(f.map), 2.0 * f.log_scale);
    } else {
      acc.apply(f.map, f.log_scale);
    }
    t.push_back(seg.times()[i + 1] - seg.start_time());
    for (int c = 0; c < k; ++c) cols[static_cast<std::size_t>(c)].push_back(acc.log_diagonal()(c));
  }
  if (t.size() < 2) throw std::invalid_argument("exponent estimation needs a nonempty segment");
  std::vector<double> s = column_slopes(t, cols, t.back(), nullptr);
  std::sort(s.begin(), s.end(), std::greater<>());
  return s;
}

}  // namespace

std::string to_string(Status s) {
  switch (s) {
    case Status::pass:
      return "pass";
    case Status::fail:
      return "fail";
    case Status::abstain:
      return "abstain";
    case Status::not_applicable:
      return "not_applicable";
  }
  return "unknown";
}

std::optional<Status> parse_status(std::string_view s) {
  if (s == "pass") return Status::pass;
  if (s == "fail") return Status::fail;
  if (s == "abstain") return Status::abstain;
  if (s == "not_applicable") return Status::not_applicable;
  return std::nullopt;
}

std::string to_string(Family f) { return f == Family::phi ? "phi" : "psi"; }

LinearFit fit_slope(const std::vector<double>& t, const std::vector<double>& y, double cut) {
  if (t.size() != y.size()) throw std::invalid_argument("fit_slope: size mismatch");
  if (t.size() < 2) throw std::invalid_argument("fit_slope: need at least two points");
  const double t0 = t.front();
  const double t1 = t.back();
  const double from = t0 + cut * (t1 - t0);
  std::size_t first = 0;
  while (first < t.size() && t[first] < from - 1e-12 * std::max(1.0, std::abs(from))) ++first;
  if (t.size() - first < 2) first = t.size() - 2;
  const std::size_t m = t.size() - first;
  double mt = 0.0;
  double my = 0.0;
  for (std::size_t i = first; i < t.size(); ++i) {
    mt += t[i];
    my += y[i];
  }
  mt /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double stt = 0.0;
  double sty = 0.0;
  for (std::size_t i = first; i < t.size(); ++i) {
    stt += (t[i] - mt) * (t[i] - mt);
    sty += (t[i] - mt) * (y[i] - my);
  }
  if (!(stt > 0.0)) throw std::invalid_argument("fit_slope: degenerate time samples");
  LinearFit f;
  f.slope = sty / stt;
  f.intercept = my - f.slope * mt;
  f.count = m;
  double ss = 0.0;
  for (std::size_t i = first; i < t.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * t[i]);
    ss += r * r;
  }
  f.residual = std::sqrt(ss / static_cast<double>(m));
  return f;
}

double log_constant(const std::vector<double>& t, const std::vector<double>& y, double rate) {
  double c = -kInf;
  for (std::size_t i = 0; i < t.size(); ++i) c = std::max(c, y[i] - rate * t[i]);
  return c;
}

// ---------------------------------------------------------------- quotients

QuotientSeries domination_quotient_series(const SplittingField& split, const CocycleSegment& seg) {
  QuotientSeries q;
  q.residual = invariance_residual(split, seg).value;
  if (q.residual > kInvarianceTol) {
    q.abstained = true;
    return q;
  }
  const BundleSeries e = bundle_series(split, seg, Bundle::e);
  const BundleSeries f = bundle_series(split, seg, Bundle::f);
  q.times = e.times;
  q.log_quotient.resize(e.times.size());
  for (std::size_t j = 0; j < e.times.size(); ++j) {
    q.log_quotient[j] = std::isfinite(f.log_conorm[j]) ? e.log_norm[j] - f.log_conorm[j] : kInf;
  }
  return q;
}

std::optional<double> domination_quotient(const SplittingField& split, const CocycleSegment& seg) {
  const QuotientSeries q = domination_quotient_series(split, seg);
  if (q.abstained) return std::nullopt;
  return q.log_quotient.back();
}

Verdict domination_exponent(const SplittingField& split, const SampleSet& samples, double span) {
  Verdict v = make_verdict("domination", samples, span);
  std::vector<SampleFit> fits;
  double max_resid = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const QuotientSeries q = domination_quotient_series(split, samples.segment(i, span));
    max_resid = std::max(max_resid, q.residual);
    if (q.abstained) return abstain_not_invariant(std::move(v), samples, i, q.residual);
    fits.push_back(fit_sample(i, q.times, q.log_quotient));
    append_series(v, "log_quotient", i, q.times, q.log_quotient);
  }
  v.values["invariance_residual"] = max_resid;
  decide(v, fits, true, samples, "log_quotient");
  return v;
}

std::vector<double> geometric_time_grid(double t_max) {
  std::vector<double> g;
  for (double t = 0.25; t <= t_max * (1.0 + 1e-12); t *= 2.0) g.push_back(t);
  return g;
}

Verdict finite_time_domination(const SplittingField& split, const SampleSet& samples,
                               const std::vector<double>& time_grid) {
  if (time_grid.empty()) throw std::invalid_argument("finite_time_domination needs a nonempty time grid");
  if (!std::is_sorted(time_grid.begin(), time_grid.end()) || !(time_grid.front() > 0.0)) {
    throw std::invalid_argument("time grid must be positive and increasing");
  }
  Verdict v = make_verdict("finite_time_domination", samples, time_grid.back());
  const double threshold = std::log(kFiniteTimeThreshold);
  double max_resid = 0.0;
  std::size_t worst_sample = 0;
  double worst_value = -kInf;
  for (double T : time_grid) {
    worst_value = -kInf;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const CocycleSegment seg = samples.segment(i, T);
      const QuotientSeries q = domination_quotient_series(split, seg);
      max_resid = std::max(max_resid, q.residual);
      if (q.abstained) return abstain_not_invariant(std::move(v), samples, i, q.residual);
      if (q.log_quotient.back() > worst_value) {
        worst_value = q.log_quotient.back();
        worst_sample = i;
      }
    }
    v.series.push_back({T, "max_log_quotient", worst_value});
    if (worst_value < threshold) {
      v.status = Status::pass;
      v.values["T"] = T;
      v.values["max_log_quotient"] = worst_value;
      v.values["invariance_residual"] = max_resid;
      return v;
    }
  }
  v.status = Status::fail;
  v.values["max_log_quotient"] = worst_value;
  v.values["invariance_residual"] = max_resid;
  v.notes.push_back("quotient never dropped below 1/2 on the time grid");
  v.witness = Witness{samples.point(worst_sample), time_grid.back(), worst_value, "log_quotient"};
  return v;
}

// ------------------------------------------------------------ bundle rates

Verdict uniform_contraction(const SplittingField& split, const SampleSet& samples, double span) {
  Verdict v = make_verdict("uniform_contraction", samples, span);
  std::vector<SampleFit> fits;
  double max_resid = 0.0;
  bool literal = false;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const CocycleSegment seg = samples.segment(i, span);
    const double r = invariance_residual(split, seg).value;
    max_resid = std::max(max_resid, r);
    const bool use_literal = r > kInvarianceTol;
    literal = literal || use_literal;
    const BundleSeries s =
        use_literal ? literal_bundle_series(split, seg, Bundle::e) : bundle_series(split, seg, Bundle::e);
    fits.push_back(fit_sample(i, s.times, s.log_norm));
    append_series(v, "log_norm_E", i, s.times, s.log_norm);
  }
  v.values["invariance_residual"] = max_resid;
  if (literal) v.notes.push_back("splitting not invariant: literal forward push of E used");
  decide(v, fits, true, samples, "log_norm_E");
  return v;
}

Verdict sectional_expansion(const SplittingField& split, const SampleSet& samples, double span, Bundle which) {
  const int k = which == Bundle::e ? split.dim_e() : split.dim_f();
  if (k < 2) throw std::invalid_argument("sectional expansion undefined");
  Verdict v = make_verdict("sectional_expansion", samples, span);
  std::vector<SampleFit> fits;
  double max_resid = 0.0;
  double max_route_diff = 0.0;
  bool literal = false;
  const std::string quantity = which == Bundle::e ? "log_min_area_E" : "log_min_area_F";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const CocycleSegment seg = samples.segment(i, span);
    const double r = invariance_residual(split, seg).value;
    max_resid = std::max(max_resid, r);
    if (r > kInvarianceTol) {
      literal = true;
      const BundleSeries s = literal_bundle_series(split, seg, which);
      fits.push_back(fit_sample(i, s.times, s.log_min_two_plane));
      append_series(v, quantity, i, s.times, s.log_min_two_plane);
      continue;
    }
    const auto steps = restricted_steps(split, seg, which);
    RestrictedProduct direct(k);
    RestrictedProduct wedge(choose2(k));
    std::vector<double> t{0.0};
    std::vector<double> y{0.0};
    for (std::size_t j = 0; j < steps.size(); ++j) {
      const auto& st = steps[j];
      direct.apply(st.c, st.log_scale, st.c_inv);
      wedge.apply(compound2(st.c), 2.0 * st.log_scale, st.c_inv.size() > 0 ? compound2(st.c_inv) : Matrix());
      t.push_back(seg.times()[j + 1] - seg.start_time());
      y.push_back(direct.log_min_two_plane());
      if (std::isfinite(y.back())) max_route_diff = std::max(max_route_diff, std::abs(wedge.log_conorm() - y.back()));
    }
    fits.push_back(fit_sample(i, t, y));
    append_series(v, quantity, i, t, y);
  }
  v.values["invariance_residual"] = max_resid;
  v.values["wedge_route_max_diff"] = max_route_diff;
  if (literal) v.notes.push_back("splitting not invariant: literal forward push used");
  decide(v, fits, false, samples, quantity);
  return v;
}

Verdict sectional_contraction(const SplittingField& split, const SampleSet& samples, double span, Bundle which) {
  const int k = which == Bundle::e ? split.dim_e() : split.dim_f();
  if (k < 2) throw std::invalid_argument("sectional expansion undefined");
  Verdict v = make_verdict("sectional_contraction", samples, span);
  std::vector<SampleFit> fits;
  double max_resid = 0.0;
  const std::string quantity = which == Bundle::e ? "log_max_area_E" : "log_max_area_F";
  // under the reversed cocycle the bundle's stable direction flips
  const Direction route = which == Bundle::e ? Direction::forward : Direction::backward;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const CocycleSegment seg = samples.segment(i, span);
    const double r = invariance_residual(split, seg).value;
    max_resid = std::max(max_resid, r);
    if (r > kInvarianceTol) return abstain_not_invariant(std::move(v), samples, i, r);
    const CocycleSegment rev = seg.reversed();
    const BundleSeries s = bundle_series(split, rev, which, route);
    fits.push_back(fit_sample(i, s.times, s.log_min_two_plane));
    // forward area growth of the largest 2-plane: minus the reversed expansion
    std::vector<double> fwd(s.log_min_two_plane.size());
    std::transform(s.log_min_two_plane.begin(), s.log_min_two_plane.end(), fwd.begin(), [](double x) { return -x; });
    append_series(v, quantity, i, s.times, fwd);
  }
  v.values["invariance_residual"] = max_resid;
  decide(v, fits, false, samples, quantity);
  // report the forward-time area slope
  if (v.exponent) {
    v.values["reversed_area_slope"] = *v.exponent;
    v.exponent = -*v.exponent;
  }
  if (v.witness) v.witness->value = -v.witness->value;
  return v;
}

// ------------------------------------------------------------- singularities

namespace {

std::string singularity_label(const SingularityRecord& rec) {
  std::ostringstream os;
  os << "singularity at (";
  for (Eigen::Index i = 0; i < rec.location.size(); ++i) os << (i ? ", " : "") << format_number(rec.location(i));
  os << ")";
  return os.str();
}

// Sorted real parts of the jacobian restricted to an invariant subspace.
std::vector<double> restricted_real_parts(const SingularityRecord& rec, const Subspace& s, double* defect) {
  const Matrix& a = rec.jacobian;
  if (s.ambient_dim() != a.rows()) throw std::invalid_argument("subspace does not match the jacobian");
  const double d = invariance_defect(a, s);
  if (d > 1e-8) throw std::invalid_argument("E or F is not invariant under the jacobian");
  if (defect) *defect = std::max(*defect, d);
  std::vector<double> re = real_parts(s.frame().transpose() * a * s.frame());
  std::sort(re.begin(), re.end());
  return re;
}

Verdict eigen_verdict(const std::string& criterion, const SingularityRecord& rec, double exponent, bool want_negative,
                      double defect, const std::string& quantity) {
  Verdict v;
  v.criterion = criterion;
  v.samples = singularity_label(rec);
  v.exponent = exponent;
  v.values["invariance_residual"] = defect;
  const bool ok = want_negative ? exponent < -kSlopeThreshold : exponent > kSlopeThreshold;
  v.status = ok ? Status::pass : Status::fail;
  if (std::abs(exponent) <= kSlopeThreshold) v.notes.push_back("neutral: rate within the threshold band");
  if (!ok) v.witness = Witness{rec.location, 0.0, exponent, quantity};
  return v;
}

}  // namespace

Verdict singularity_domination(const SingularityRecord& rec, const Subspace& e, const Subspace& f) {
  const auto n = rec.jacobian.rows();
  if (e.ambient_dim() != n || f.ambient_dim() != n || e.dim() + f.dim() != n) {
    throw std::invalid_argument("E and F must split the tangent space at the singularity");
  }
  double defect = 0.0;
  const std::vector<double> re_e = restricted_real_parts(rec, e, &defect);
  const std::vector<double> re_f = restricted_real_parts(rec, f, &defect);
  const double max_e = re_e.back();
  const double min_f = re_f.front();
  Verdict v;
  v.criterion = "singularity_domination";
  v.samples = singularity_label(rec);
  v.exponent = max_e - min_f;
  v.values["max_re_E"] = max_e;
  v.values["min_re_F"] = min_f;
  v.values["invariance_residual"] = defect;
  v.status = *v.exponent < 0.0 ? Status::pass : Status::fail;
  if (v.status == Status::fail) v.witness = Witness{rec.location, 0.0, *v.exponent, "eigenvalue_exponent"};
  return v;
}

Verdict singularity_contraction(const SingularityRecord& rec, const Subspace& e) {
  double defect = 0.0;
  const std::vector<double> re = restricted_real_parts(rec, e, &defect);
  return eigen_verdict("singularity_contraction", rec, re.back(), true, defect, "max_re_E");
}

Verdict singularity_sectional_expansion(const SingularityRecord& rec, const Subspace& f) {
  if (f.dim() < 2) throw std::invalid_argument("sectional expansion undefined");
  double defect = 0.0;
  const std::vector<double> re = restricted_real_parts(rec, f, &defect);
  return eigen_verdict("singularity_sectional_expansion", rec, re[0] + re[1], false, defect, "min_pair_re_F");
}

Verdict singularity_sectional_contraction(const SingularityRecord& rec, const Subspace& e) {
  if (e.dim() < 2) throw std::invalid_argument("sectional expansion undefined");
  double defect = 0.0;
  const std::vector<double> re = restricted_real_parts(rec, e, &defect);
  const std::size_t k = re.size();
  return eigen_verdict("singularity_sectional_contraction", rec, re[k - 1] + re[k - 2], true, defect,
                       "max_pair_re_E");
}

Verdict flow_in_F_residual(const SplittingField& split, const SampleSet& samples, const Verdict& contraction,
                           double threshold) {
  Verdict v = make_verdict("flow_in_F", samples, 0.0);
  if (contraction.status != Status::pass) {
    v.status = Status::abstain;
    v.notes.push_back("E is not verified uniformly contracted");
    return v;
  }
  double worst = -1.0;
  std::size_t worst_i = 0;
  std::size_t regular = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto x_dir = samples.flow_direction(i);
    if (!x_dir) {
      v.status = Status::not_applicable;
      v.notes.push_back("the system has no flow direction");
      return v;
    }
    const Vector x = samples.point(i);
    if (x_dir->norm() <= 1e-10 * (1.0 + x.norm())) continue;
    ++regular;
    const Splitting s = split.at(x);
    const double r = (oblique_projection(s.e, s.f) * *x_dir).norm() / x_dir->norm();
    v.series.push_back({static_cast<double>(i), "log_flow_E_component", std::log(r)});
    if (r > worst) {
      worst = r;
      worst_i = i;
    }
  }
  if (regular == 0) {
    v.status = Status::not_applicable;
    v.notes.push_back("all samples are singularities");
    return v;
  }
  v.values["residual"] = worst;
  v.values["regular_samples"] = static_cast<double>(regular);
  v.values["threshold"] = threshold;
  v.status = worst < threshold ? Status::pass : Status::fail;
  if (v.status == Status::fail) v.witness = Witness{samples.point(worst_i), 0.0, worst, "flow_E_component"};
  return v;
}

// ---------------------------------------------------------------- exponents

LyapunovSpectrum lyapunov_spectrum(const CocycleSegment& seg) {
  if (seg.empty()) throw std::invalid_argument("lyapunov_spectrum needs a nonempty segment");
  const int n = seg.dim();
  FrameAccumulator acc(Matrix::Identity(n, n));
  std::vector<double> t{0.0};
  std::vector<std::vector<double>> cols(static_cast<std::size_t>(n), std::vector<double>{0.0});
  for (std::size_t i = 0; i < seg.size(); ++i) {
    const Factor& f = seg.factors()[i];
    acc.apply(f.map, f.log_scale);
    t.push_back(seg.times()[i + 1] - seg.start_time());
    for (int c = 0; c < n; ++c) cols[static_cast<std::size_t>(c)].push_back(acc.log_diagonal()(c));
  }
  LyapunovSpectrum ls;
  ls.base_point = seg.start_point();
  ls.span = seg.span();
  double resid = 0.0;
  std::vector<double> full = column_slopes(t, cols, t.back(), &resid);
  ls.fit_residual = resid;
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return full[a] > full[b]; });
  for (std::size_t c : order) ls.exponents.push_back(full[c]);

  std::size_t half_points = 0;
  for (double x : t) half_points += x <= 0.5 * t.back() ? 1 : 0;
  if (half_points >= 3) {
    std::vector<double> half = column_slopes(t, cols, 0.5 * t.back(), nullptr);
    std::sort(half.begin(), half.end(), std::greater<>());
    double change = 0.0;
    for (std::size_t c = 0; c < half.size(); ++c) change = std::max(change, std::abs(half[c] - ls.exponents[c]));
    ls.convergence_change = change;
    ls.converged = change < 1e-3;
  } else {
    ls.convergence_change = kInf;
  }
  if (auto l = seg.liouville_log_det()) ls.divergence_average = *l / seg.span();

  for (std::size_t j = 1; j < t.size(); ++j) {
    if (!(t[j] > 0.0)) continue;
    ls.history_times.push_back(t[j]);
    std::vector<double> row;
    for (std::size_t c : order) row.push_back(cols[c][j] / t[j]);
    ls.history.push_back(std::move(row));
  }
  return ls;
}

LyapunovSpectrum lyapunov_spectrum(const CocycleSystem& system, const Vector& x0, double T) {
  return lyapunov_spectrum(system.segment(x0, T));
}

Verdict lyapunov_verdict(const LyapunovSpectrum& ls) {
  Verdict v;
  v.criterion = "lyapunov_spectrum";
  std::ostringstream os;
  os << "orbit from (" << format_number(ls.base_point(0)) << ", " << format_number(ls.base_point(1)) << ", " << format_number(ls.base_point(2))
     << ")";
  v.samples = os.str();
  v.span = ls.span;
  v.exponent = ls.exponents.front();
  v.fit_residual = ls.fit_residual;
  double sum = 0.0;
  double nearest_zero = ls.exponents.front();
  for (std::size_t i = 0; i < ls.exponents.size(); ++i) {
    v.values["exponent_" + std::to_string(i + 1)] = ls.exponents[i];
    sum += ls.exponents[i];
    if (std::abs(ls.exponents[i]) < std::abs(nearest_zero)) nearest_zero = ls.exponents[i];
  }
  v.values["sum"] = sum;
  v.values["nearest_zero"] = nearest_zero;
  v.values["convergence_change"] = ls.convergence_change;
  if (ls.divergence_average) v.values["divergence_average"] = *ls.divergence_average;
  if (!ls.converged) v.notes.push_back("not converged: half-span and full-span fits differ by more than 1e-3");
  v.status = ls.exponents.front() > kSlopeThreshold ? Status::pass : Status::fail;
  if (v.status == Status::fail) v.witness = Witness{ls.base_point, ls.span, ls.exponents.front(), "top_exponent"};
  for (std::size_t j = 0; j < ls.history_times.size(); ++j) {
    for (std::size_t i = 0; i < ls.history[j].size(); ++i) {
      v.series.push_back({ls.history_times[j], "running_exponent_" + std::to_string(i + 1), ls.history[j][i]});
    }
  }
  return v;
}

std::vector<double> sectional_lyapunov_exponents(const CocycleSegment& seg, const Subspace& f) {
  if (f.dim() < 2) throw std::invalid_argument("sectional Lyapunov exponents need dim F >= 2");
  if (f.ambient_dim() != seg.dim()) throw std::invalid_argument("F does not match the cocycle dimension");
  return frame_exponents(seg, compound2(f.frame()), true);
}

std::vector<double> sectional_lyapunov_exponents(const CocycleSystem& system, const SplittingField& split,
                                                 const Vector& x0, double T) {
  return sectional_lyapunov_exponents(system.segment(x0, T), split.at(x0).f);
}

std::vector<double> subspace_lyapunov_exponents(const CocycleSegment& seg, const Subspace& f) {
  if (f.ambient_dim() != seg.dim()) throw std::invalid_argument("subspace does not match the cocycle dimension");
  return frame_exponents(seg, f.frame(), false);
}

// ------------------------------------------------------------- subadditivity

double family_value(Family family, const SplittingField& split, const CocycleSegment& seg, bool literal) {
  if (seg.empty()) return 0.0;
  if (family == Family::phi) {
    const BundleSeries s =
        literal ? literal_bundle_series(split, seg, Bundle::e) : bundle_series(split, seg, Bundle::e);
    return s.log_norm.back();
  }
  if (split.dim_f() < 2) throw std::invalid_argument("psi needs dim F >= 2");
  if (literal) {
    const FrameAccumulator acc = push_frame(seg, split.at(seg.end_point()).f.frame(), Direction::backward);
    return acc.log_top_two();
  }
  return -bundle_series(split, seg, Bundle::f).log_min_two_plane.back();
}

Verdict subadditivity_check(Family family, const SplittingField& split, const SampleSet& samples,
                            const std::vector<TimePair>& pairs, double eps) {
  if (pairs.empty()) throw std::invalid_argument("subadditivity_check needs time pairs");
  double longest = 0.0;
  for (const auto& p : pairs) {
    if (!(p.s > 0.0) || !(p.t > 0.0)) throw std::invalid_argument("time pairs must be positive");
    longest = std::max(longest, p.s + p.t);
  }
  Verdict v = make_verdict("subadditivity_" + to_string(family), samples, longest);
  std::size_t violations = 0;
  std::size_t checked = 0;
  double max_excess = -kInf;
  std::optional<Witness> witness;
  bool any_literal = false;
  double rate = -kInf;
  std::vector<std::pair<std::vector<double>, std::vector<double>>> curves;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (const auto& p : pairs) {
      const CocycleSegment seg = samples.segment(i, p.s + p.t);
      const bool literal = invariance_residual(split, seg).value > kInvarianceTol;
      any_literal = any_literal || literal;
      const auto js = seg.index_at(seg.start_time() + p.s);
      if (!js) throw std::invalid_argument("time s = " + format_number(p.s) + " is not a checkpoint of the segment");
      const double total = family_value(family, split, seg, literal);
      const double first = family_value(family, split, seg.slice(0, *js), literal);
      const double second = family_value(family, split, seg.slice(*js, seg.size()), literal);
      const double excess = total - first - second;
      ++checked;
      if (excess > max_excess) max_excess = excess;
      if (excess > eps) {
        ++violations;
        if (!witness || excess > witness->value) {
          witness = Witness{samples.point(i), p.s + p.t, excess, "subadditivity_excess(s=" + format_number(p.s) + ")"};
        }
      }
    }
    // growth curve over the longest span for the exponential bound
    const CocycleSegment seg = samples.segment(i, longest);
    const bool literal = invariance_residual(split, seg).value > kInvarianceTol;
    std::vector<double> t{0.0};
    std::vector<double> y{0.0};
    for (std::size_t j = 1; j <= seg.size(); ++j) {
      t.push_back(seg.times()[j] - seg.start_time());
      y.push_back(family_value(family, split, seg.slice(0, j), literal));
    }
    append_series(v, to_string(family), i, t, y);
    if (t.size() >= 2 && all_finite(y)) rate = std::max(rate, fit_slope(t, y).slope);
    curves.emplace_back(std::move(t), std::move(y));
  }
  v.values["pairs_checked"] = static_cast<double>(checked);
  v.values["violations"] = static_cast<double>(violations);
  v.values["max_excess"] = max_excess;
  if (any_literal) v.notes.push_back("splitting not invariant: literal push route used");
  if (std::isfinite(rate)) {
    const double half = 0.5 * rate;
    double log_c = -kInf;
    for (const auto& [t, y] : curves) {
      if (all_finite(y)) log_c = std::max(log_c, log_constant(t, y, half));
    }
    v.values["rate"] = rate;
    v.exponent = half;
    v.constant = std::exp(log_c);
  }
  v.status = violations == 0 ? Status::pass : Status::fail;
  if (violations > 0) v.witness = witness;
  return v;
}

// ------------------------------------------------------- index feasibility

FeasibilityResult domination_index_feasibility(const std::vector<MarkedDerivative>& points, bool suspended) {
  if (points.empty()) throw std::invalid_argument("index feasibility needs at least one point");
  struct Item {
    double modulus;
    bool flow;
    int pair;
  };
  FeasibilityResult res;
  std::optional<std::vector<IndexCandidate>> common;
  for (const auto& mp : points) {
    const Matrix& d = mp.derivative;
    if (d.rows() != d.cols() || d.rows() == 0) throw std::invalid_argument("derivative must be square");
    Eigen::EigenSolver<Matrix> es(d, false);
    const auto& ev = es.eigenvalues();
    const double scale = std::max(1.0, d.norm());
    std::vector<Item> items;
    std::vector<bool> paired(static_cast<std::size_t>(ev.size()), false);
    int next_pair = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      if (paired[static_cast<std::size_t>(i)]) continue;
      const bool complex = std::abs(ev(i).imag()) > 1e-10 * scale;
      if (!complex) {
        items.push_back({std::abs(ev(i)), false, -1});
        continue;
      }
      Eigen::Index mate = -1;
      for (Eigen::Index j = i + 1; j < ev.size(); ++j) {
        if (!paired[static_cast<std::size_t>(j)] && std::abs(ev(j) - std::conj(ev(i))) <= 1e-8 * scale) {
          mate = j;
          break;
        }
      }
      if (mate < 0) throw std::runtime_error("unpaired complex eigenvalue");
      paired[static_cast<std::size_t>(mate)] = true;
      items.push_back({std::abs(ev(i)), false, next_pair});
      items.push_back({std::abs(ev(mate)), false, next_pair});
      ++next_pair;
    }
    if (suspended) items.push_back({1.0, true, -1});
    std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.modulus < b.modulus; });

    PointFeasibility pf;
    pf.name = mp.name;
    for (const auto& it : items) pf.moduli.push_back(it.modulus);
    const int total = static_cast<int>(items.size());
    for (int k = 1; k < total; ++k) {
      const Item& lo = items[static_cast<std::size_t>(k - 1)];
      const Item& hi = items[static_cast<std::size_t>(k)];
      if (lo.pair >= 0 && lo.pair == hi.pair) {
        pf.rejected.push_back("index " + std::to_string(k) + ": cuts a complex-conjugate pair");
        continue;
      }
      if (!(lo.modulus < hi.modulus * (1.0 - 1e-9))) {
        pf.rejected.push_back("index " + std::to_string(k) + ": no modulus gap");
        continue;
      }
      IndexCandidate c{k, std::nullopt};
      if (suspended) {
        bool flow_in_e = false;
        for (int j = 0; j < k; ++j) flow_in_e = flow_in_e || items[static_cast<std::size_t>(j)].flow;
        // a contracted E cannot hold the flow direction and an expanded F
        // cannot either (forward and reversed flow)
        bool e_contracted = true;
        bool f_expanded = true;
        for (int j = 0; j < total; ++j) {
          const Item& it = items[static_cast<std::size_t>(j)];
          if (j < k) e_contracted = e_contracted && it.modulus < 1.0;
          if (j >= k) f_expanded = f_expanded && it.modulus > 1.0;
        }
        if ((flow_in_e && e_contracted) || (!flow_in_e && f_expanded)) {
          pf.rejected.push_back("index " + std::to_string(k) + ": flow direction on an inconsistent side");
          continue;
        }
        c.flow_in_e = flow_in_e;
      }
      pf.feasible.push_back(c);
    }
    if (!common) {
      common = pf.feasible;
    } else {
      std::vector<IndexCandidate> keep;
      for (const auto& c : *common) {
        if (std::find(pf.feasible.begin(), pf.feasible.end(), c) != pf.feasible.end()) keep.push_back(c);
      }
      common = std::move(keep);
    }
    res.points.push_back(std::move(pf));
  }
  res.common = *common;
  Verdict& v = res.verdict;
  v.criterion = "index_feasibility";
  v.samples = std::to_string(points.size()) + " marked point(s)" + (suspended ? ", suspended" : "");
  v.values["common_indices"] = static_cast<double>(res.common.size());
  if (!res.common.empty()) {
    v.status = Status::pass;
  } else {
    v.status = Status::fail;
    v.notes.push_back("no dominated splitting: the feasible index sets have empty intersection");
    v.witness = Witness{Vector::Zero(1), 0.0, 0.0, "feasible_intersection_size"};
  }
  return res;
}

}  // namespace splitdom
