#include "splitdom/gallery.hpp"

#include "splitdom/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

namespace splitdom {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require(bool ok, const std::string& what) {
  if (!ok) throw GalleryError("parameter constraint violated: " + what);
}

Expectation expect_rate(double exponent, bool want_negative) {
  const bool ok = want_negative ? exponent < -kSlopeThreshold : exponent > kSlopeThreshold;
  return {ok ? Status::pass : Status::fail, exponent, std::nullopt};
}

// singularity_domination passes iff the exact exponent is negative
Expectation expect_exact(double exponent) { return {exponent < 0.0 ? Status::pass : Status::fail, exponent, std::nullopt}; }

Expectation expect_status(Status s) { return {s, std::nullopt, std::nullopt}; }

Matrix block_diag(const Matrix& a, const Matrix& b) {
  Matrix m = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  m.topLeftCorner(a.rows(), a.cols()) = a;
  m.bottomRightCorner(b.rows(), b.cols()) = b;
  return m;
}

Matrix rotation(double angle) {
  Matrix r(2, 2);
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

Matrix diag(std::initializer_list<double> d) {
  Vector v(static_cast<Eigen::Index>(d.size()));
  Eigen::Index i = 0;
  for (double x : d) v(i++) = x;
  return v.asDiagonal();
}

Matrix scalar(double x) { return Matrix::Constant(1, 1, x); }

std::shared_ptr<PointSamples> origin_samples(std::shared_ptr<const CocycleSystem> system, const std::string& label,
                                             std::vector<Vector> extra = {}) {
  std::vector<Vector> pts{Vector::Zero(system->state_dim())};
  for (auto& p : extra) pts.push_back(std::move(p));
  return std::make_shared<PointSamples>(std::move(system), std::move(pts), label);
}

std::vector<double> step_grid(double step, double t_max) {
  std::vector<double> g;
  for (int k = 1; k * step <= t_max * (1.0 + 1e-12); ++k) g.push_back(k * step);
  return g;
}

// One heavy resource per seed, built on first use and shared by every check
// of an entry.
template <class T>
class PerSeed {
 public:
  explicit PerSeed(std::function<T(std::uint64_t)> make) : make_(std::move(make)) {}
  std::shared_ptr<const T> get(std::uint64_t seed) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(seed);
    if (it != cache_.end()) return it->second;
    auto value = std::make_shared<const T>(make_(seed));
    cache_.emplace(seed, value);
    return value;
  }

 private:
  std::function<T(std::uint64_t)> make_;
  std::mutex mutex_;
  std::map<std::uint64_t, std::shared_ptr<const T>> cache_;
};

}  // namespace

const GalleryCheck& GalleryEntry::check(const std::string& id) const {
  for (const auto& c : checks) {
    if (c.id == id) return c;
  }
  throw GalleryError(name + ": no check named '" + id + "'");
}

bool matches(const Expectation& expected, const Verdict& v, double tolerance) {
  if (!expected.status) return v.status != Status::abstain;
  if (v.status != *expected.status) return false;
  if (!expected.exponent) return true;
  if (!v.exponent) return false;
  const double tol = expected.tolerance.value_or(tolerance);
  return std::abs(*v.exponent - *expected.exponent) <= tol;
}

// ------------------------------------------------------------- linear saddles

GalleryEntry entry_linear_saddle_3d(const LinearSaddle3dParams& p) {
  require(p.l2 < p.l3, "l2 < l3");
  require(p.l3 < 0.0, "l3 < 0");
  require(-p.l3 < p.l1, "-l3 < l1");
  require(p.l1 + p.l2 > 0.0, "l1 + l2 > 0");

  GalleryEntry e;
  e.name = "linear_saddle_3d";
  e.title = "Linear Lorenz-like saddle in R^3";
  e.anchor = "singularity with l2 < l3 < 0 < -l3 < l1 and l1 + l2 > 0: E contracted, F sectionally expanding, "
             "splitting not dominated";
  e.system_kind = "vector_field";
  e.parameters = {{"l1", p.l1}, {"l2", p.l2}, {"l3", p.l3}};
  e.constraints = {"l2 < l3", "l3 < 0", "-l3 < l1", "l1 + l2 > 0"};

  const Matrix a = diag({p.l1, p.l2, p.l3});
  const auto rec = std::make_shared<SingularityRecord>(analyze_equilibrium(a, Vector::Zero(3)));
  const Subspace es = Subspace::coordinate(3, {2});
  const Subspace fs = Subspace::coordinate(3, {0, 1});
  const auto split = std::make_shared<SplittingField>(SplittingField::constant("E3 + (E1 + E2)", es, fs));
  auto system = std::make_shared<FlowSystem>(linear_field(a, "linear_saddle_3d"));
  const Vector s1 = (Vector(3) << 0.0, 1.0, 0.0).finished();
  const Vector s2 = (Vector(3) << 0.0, 0.6, -0.8).finished();
  const auto samples = origin_samples(system, "origin and stable-manifold points", {s1, s2});
  const double span = 20.0;

  e.checks.push_back({"singularity_domination", "singularity_domination", "eigenvalue route at the origin",
                      expect_exact(p.l3 - p.l2), {},
                      [rec, es, fs](const RunOptions&) { return singularity_domination(*rec, es, fs); }});
  e.checks.push_back({"domination", "domination", "integrated quotient slope", expect_rate(p.l3 - p.l2, true), {},
                      [split, samples, span](const RunOptions&) { return domination_exponent(*split, *samples, span); }});
  e.checks.push_back({"singularity_contraction", "singularity_contraction", "eigenvalue route, E = E3",
                      expect_rate(p.l3, true), {},
                      [rec, es](const RunOptions&) { return singularity_contraction(*rec, es); }});
  e.checks.push_back({"uniform_contraction", "uniform_contraction", "integrated, E = E3", expect_rate(p.l3, true), {},
                      [split, samples, span](const RunOptions&) { return uniform_contraction(*split, *samples, span); }});
  e.checks.push_back({"singularity_sectional_expansion", "singularity_sectional_expansion",
                      "eigenvalue route, F = E1 + E2", expect_rate(p.l1 + p.l2, false), {},
                      [rec, fs](const RunOptions&) { return singularity_sectional_expansion(*rec, fs); }});
  e.checks.push_back({"sectional_expansion", "sectional_expansion", "integrated, F = E1 + E2",
                      expect_rate(p.l1 + p.l2, false), {},
                      [split, samples, span](const RunOptions&) { return sectional_expansion(*split, *samples, span); }});
  auto origin = origin_samples(system, "origin");
  e.checks.push_back({"finite_time_domination", "finite_time_domination", "quotient below 1/2 for some T <= 8",
                      expect_status(p.l3 - p.l2 < 0.0 ? Status::pass : Status::fail), {},
                      [split, origin](const RunOptions&) {
                        return finite_time_domination(*split, *origin, geometric_time_grid(8.0));
                      }});
  e.system = system;
  e.base_point = Vector::Zero(3);
  return e;
}

GalleryEntry entry_linear_saddle_4d(const LinearSaddle4dParams& p) {
  require(p.l2 < p.l3, "l2 < l3");
  require(p.l3 < 0.0, "l3 < 0");
  require(0.0 < p.l4, "0 < l4");
  require(p.l4 < p.l1, "l4 < l1");
  require(p.l1 + p.l3 > 0.0, "l1 + l3 > 0");
  require(p.l2 + p.l4 < 0.0, "l2 + l4 < 0");

  GalleryEntry e;
  e.name = "linear_saddle_4d";
  e.title = "Linear saddle in R^4 with an area-contracting and an area-expanding bundle";
  e.anchor = "l1 + l3 > 0 and l2 + l4 < 0: E2 + E4 sectionally contracted, E1 + E3 sectionally expanded, "
             "splitting not dominated";
  e.system_kind = "vector_field";
  e.parameters = {{"l1", p.l1}, {"l2", p.l2}, {"l3", p.l3}, {"l4", p.l4}};
  e.constraints = {"l2 < l3", "l3 < 0", "0 < l4", "l4 < l1", "l1 + l3 > 0", "l2 + l4 < 0"};
  e.notes.push_back("bundle labels follow the area-consistent assignment: the contracting bundle is E2 + E4; "
                    "the opposite lettering would call an area-expanding bundle contracting");

  const Matrix a = diag({p.l1, p.l2, p.l3, p.l4});
  const auto rec = std::make_shared<SingularityRecord>(analyze_equilibrium(a, Vector::Zero(4)));
  const Subspace es = Subspace::coordinate(4, {1, 3});
  const Subspace fs = Subspace::coordinate(4, {0, 2});
  const auto split = std::make_shared<SplittingField>(SplittingField::constant("(E2 + E4) + (E1 + E3)", es, fs));
  auto system = std::make_shared<FlowSystem>(linear_field(a, "linear_saddle_4d"));
  const Vector s1 = (Vector(4) << 0.0, 1.0, 0.0, 0.0).finished();
  const Vector s2 = (Vector(4) << 0.0, 0.6, -0.8, 0.0).finished();
  const auto samples = origin_samples(system, "origin and stable-manifold points", {s1, s2});
  const double span = 20.0;
  const std::vector<std::string> flag{"bundle lettering swapped to the area-consistent assignment"};

  e.checks.push_back({"sectional_contraction", "sectional_contraction", "integrated, E = E2 + E4",
                      expect_rate(p.l2 + p.l4, true), flag,
                      [split, samples, span](const RunOptions&) { return sectional_contraction(*split, *samples, span); }});
  e.checks.push_back({"sectional_expansion", "sectional_expansion", "integrated, F = E1 + E3",
                      expect_rate(p.l1 + p.l3, false), flag,
                      [split, samples, span](const RunOptions&) { return sectional_expansion(*split, *samples, span); }});
  e.checks.push_back({"singularity_sectional_contraction", "singularity_sectional_contraction",
                      "eigenvalue route, E = E2 + E4", expect_rate(p.l2 + p.l4, true), flag,
                      [rec, es](const RunOptions&) { return singularity_sectional_contraction(*rec, es); }});
  e.checks.push_back({"singularity_sectional_expansion", "singularity_sectional_expansion",
                      "eigenvalue route, F = E1 + E3", expect_rate(p.l1 + p.l3, false), flag,
                      [rec, fs](const RunOptions&) { return singularity_sectional_expansion(*rec, fs); }});
  e.checks.push_back({"singularity_domination", "singularity_domination", "eigenvalue route at the origin",
                      expect_exact(p.l4 - p.l3), flag,
                      [rec, es, fs](const RunOptions&) { return singularity_domination(*rec, es, fs); }});
  e.checks.push_back({"domination", "domination", "integrated quotient slope", expect_rate(p.l4 - p.l3, true), flag,
                      [split, samples, span](const RunOptions&) { return domination_exponent(*split, *samples, span); }});
  e.system = system;
  e.base_point = Vector::Zero(4);
  return e;
}

// --------------------------------------------------------------------- lorenz

namespace {

struct LorenzAttractor {
  std::shared_ptr<FlowSystem> system;
  Vector start;  // a point on the attractor
  std::shared_ptr<SplittingField> split;
  std::shared_ptr<OrbitSamples> samples;
  std::vector<EstimateDiagnostics> diagnostics;
};

// Checkpoint spacing of the master trajectory and the sample layout: six
// samples two time units apart, each followed by at most kLorenzMaxSpan of
// estimated splitting, with a power-iteration margin on both ends.
constexpr double kLorenzStep = 0.1;
constexpr std::size_t kLorenzWindow = 40;
constexpr double kLorenzMaxSpan = 8.0;
constexpr int kLorenzSamples = 6;
constexpr double kLorenzSampleGap = 2.0;

LorenzAttractor build_lorenz_attractor(const LorenzParams& p, std::uint64_t seed) {
  LorenzAttractor r;
  VariationalOptions vo;
  vo.checkpoint_interval = kLorenzStep;
  r.system = std::make_shared<FlowSystem>(lorenz_field(p.sigma, p.rho, p.beta), vo);
  const Vector x_init = (Vector(3) << 1.0, 1.0, 20.0).finished();
  r.start = integrate(r.system->field(), x_init, 50.0).final_state();

  const double margin = static_cast<double>(kLorenzWindow) * kLorenzStep;
  const double last_sample = margin + (kLorenzSamples - 1) * kLorenzSampleGap;
  const double length = last_sample + kLorenzMaxSpan + margin + 1.0;
  auto traj = std::make_shared<const CocycleSegment>(r.system->segment(r.start, length));

  const std::size_t first = traj->index_after(margin);
  const std::size_t last = traj->index_after(last_sample + kLorenzMaxSpan);
  std::vector<std::size_t> covered;
  for (std::size_t i = first; i <= last; ++i) covered.push_back(i);
  EstimateOptions eo;
  eo.max_window = kLorenzWindow;
  eo.seed = seed;
  EstimatedSplitting est = estimate_splitting(*traj, 1, covered, eo);
  r.split = std::make_shared<SplittingField>(est.field);
  r.diagnostics = std::move(est.diagnostics);

  std::vector<std::size_t> picks;
  for (int k = 0; k < kLorenzSamples; ++k) picks.push_back(traj->index_after(margin + k * kLorenzSampleGap));
  r.samples = std::make_shared<OrbitSamples>(traj, picks, r.system, "Lorenz attractor orbit");
  return r;
}

}  // namespace

GalleryEntry entry_lorenz(const LorenzParams& p) {
  require(p.sigma > 0.0 && p.beta > 0.0, "sigma > 0 and beta > 0");
  require(p.rho > 1.0, "rho > 1");
  const VectorField field = lorenz_field(p.sigma, p.rho, p.beta);
  const auto rec = std::make_shared<SingularityRecord>(refine_singularity(field, Vector::Zero(3)));
  const LorenzLikeCheck ll = is_lorenz_like(*rec);
  require(ll.applicable && ll.ordering, "origin is a Lorenz-like singularity (l2 < l3 < 0 < -l3 < l1)");

  GalleryEntry e;
  e.name = "lorenz";
  e.title = "Lorenz equations";
  e.anchor = "sectional-hyperbolic attractor with a Lorenz-like singularity at the origin";
  e.system_kind = "vector_field";
  e.parameters = {{"sigma", p.sigma}, {"rho", p.rho}, {"beta", p.beta}};
  e.constraints = {"sigma > 0", "beta > 0", "rho > 1", "origin Lorenz-like"};
  e.derived = {{"lambda1", ll.lambda1}, {"lambda2", ll.lambda2}, {"lambda3", ll.lambda3}};
  e.notes.push_back("attractor checks use a splitting estimated by power iteration along one orbit");

  const Subspace es = rec->eigenspace(std::vector<double>{ll.lambda2});
  const Subspace fs = rec->eigenspace(std::vector<double>{ll.lambda1, ll.lambda3});
  const auto split = std::make_shared<SplittingField>(SplittingField::constant("origin eigen-splitting", es, fs));
  auto origin_system = std::make_shared<FlowSystem>(field);
  const auto origin = origin_samples(origin_system, "origin");
  const double span = 10.0;

  e.checks.push_back({"singularity_domination@origin", "singularity_domination", "E = l2-space, F = l1 + l3",
                      expect_exact(ll.lambda2 - ll.lambda3), {},
                      [rec, es, fs](const RunOptions&) { return singularity_domination(*rec, es, fs); }});
  e.checks.push_back({"uniform_contraction@origin", "uniform_contraction", "integrated at the origin",
                      expect_rate(ll.lambda2, true), {},
                      [split, origin, span](const RunOptions&) { return uniform_contraction(*split, *origin, span); }});
  e.checks.push_back({"singularity_sectional_expansion@origin", "singularity_sectional_expansion",
                      "eigenvalue route, F = l1 + l3", expect_rate(ll.lambda1 + ll.lambda3, false), {},
                      [rec, fs](const RunOptions&) { return singularity_sectional_expansion(*rec, fs); }});
  e.checks.push_back({"sectional_expansion@origin", "sectional_expansion", "integrated at the origin",
                      expect_rate(ll.lambda1 + ll.lambda3, false), {},
                      [split, origin, span](const RunOptions&) { return sectional_expansion(*split, *origin, span); }});
  e.checks.push_back({"finite_time_domination@origin", "finite_time_domination", "T grid 0.01, 0.02, ..., 1",
                      expect_status(Status::pass), {},
                      [split, origin](const RunOptions&) {
                        return finite_time_domination(*split, *origin, step_grid(0.01, 1.0));
                      }});

  auto attractor = std::make_shared<PerSeed<LorenzAttractor>>(
      [p](std::uint64_t seed) { return build_lorenz_attractor(p, seed); });
  e.checks.push_back({"uniform_contraction@attractor", "uniform_contraction", "estimated E, span 8",
                      expect_status(Status::pass), {},
                      [attractor](const RunOptions& o) {
                        auto a = attractor->get(o.seed);
                        return uniform_contraction(*a->split, *a->samples, kLorenzMaxSpan);
                      }});
  e.checks.push_back({"sectional_expansion@attractor", "sectional_expansion", "estimated F, span 8",
                      expect_status(Status::pass), {},
                      [attractor](const RunOptions& o) {
                        auto a = attractor->get(o.seed);
                        return sectional_expansion(*a->split, *a->samples, kLorenzMaxSpan);
                      }});
  e.checks.push_back({"domination@attractor", "domination", "estimated splitting, span 8",
                      expect_status(Status::pass), {},
                      [attractor](const RunOptions& o) {
                        auto a = attractor->get(o.seed);
                        return domination_exponent(*a->split, *a->samples, kLorenzMaxSpan);
                      }});
  e.checks.push_back({"finite_time_domination@attractor", "finite_time_domination", "geometric T grid up to 4",
                      expect_status(Status::pass), {},
                      [attractor](const RunOptions& o) {
                        auto a = attractor->get(o.seed);
                        return finite_time_domination(*a->split, *a->samples, geometric_time_grid(4.0));
                      }});
  e.checks.push_back({"flow_in_F@attractor", "flow_in_F", "flow direction inside estimated F",
                      expect_status(Status::pass), {},
                      [attractor](const RunOptions& o) {
                        auto a = attractor->get(o.seed);
                        const Verdict c = uniform_contraction(*a->split, *a->samples, kLorenzMaxSpan);
                        return flow_in_F_residual(*a->split, *a->samples, c);
                      }});
  const std::vector<TimePair> pairs{{0.5, 0.5}, {1.0, 2.0}, {2.0, 1.0}, {1.5, 1.5}};
  for (Family fam : {Family::phi, Family::psi}) {
    e.checks.push_back({"subadditivity_" + to_string(fam) + "@attractor", "subadditivity_" + to_string(fam),
                        "estimated splitting, four time pairs", expect_status(Status::pass), {},
                        [attractor, fam, pairs](const RunOptions& o) {
                          auto a = attractor->get(o.seed);
                          return subadditivity_check(fam, *a->split, *a->samples, pairs);
                        }});
  }
  e.checks.push_back({"lyapunov_spectrum", "lyapunov_spectrum", "QR iteration over T = 500 from the attractor",
                      {Status::pass, 0.9, 0.1}, {},
                      [attractor](const RunOptions& o) {
                        auto a = attractor->get(o.seed);
                        return lyapunov_verdict(lyapunov_spectrum(FlowSystem(a->system->field()), a->start, 500.0));
                      }});
  e.system = origin_system;
  e.base_point = integrate(field, (Vector(3) << 1.0, 1.0, 20.0).finished(), 50.0).final_state();
  return e;
}

// ---------------------------------------------------------- hybrid examples

HybridLoopModel double_homoclinic_model(const DoubleHomoclinicParams& p) {
  HybridLoopModel m;
  m.saddles.push_back(block_diag(diag({p.lu, p.ls}), scalar(-p.c)));
  m.connections.push_back(block_diag(rotation(kPi / 2), scalar(std::exp(-p.c))));
  m.connections.push_back(block_diag(rotation(-kPi / 2), scalar(std::exp(-p.c))));
  m.connection_time = 1.0;
  m.validate();
  return m;
}

std::vector<Passage> double_homoclinic_schedule() { return {{0, 3.0, 0}, {0, 3.0, 1}}; }

GalleryEntry entry_double_homoclinic(const DoubleHomoclinicParams& p) {
  require(p.lu > 0.0, "lu > 0");
  require(p.ls < 0.0, "ls < 0");
  require(p.c > 0.0, "c > 0");
  require(p.lu + p.ls > 0.0, "lu + ls > 0");

  GalleryEntry e;
  e.name = "double_homoclinic";
  e.title = "Double homoclinic loop of a volume-expanding saddle";
  e.anchor = "contraction along E weaker than the saddle's contraction: E contracted, F sectionally expanded, "
             "splitting not dominated at the singularity";
  e.system_kind = "hybrid";
  e.parameters = {{"c", p.c}, {"lu", p.lu}, {"ls", p.ls}};
  e.constraints = {"lu > 0", "ls < 0", "c > 0", "lu + ls > 0"};
  e.derived = {{"divergence", p.lu + p.ls - p.c}, {"domination_boundary_c", -p.ls}};
  e.notes.push_back("along the loop words the rotating connections make the plane block conformal over a cycle, "
                    "so the word quotient decays; non-domination is carried by the saddle");

  const HybridLoopModel model = double_homoclinic_model(p);
  const auto schedule = double_homoclinic_schedule();
  auto system = std::make_shared<HybridSystem>("double_homoclinic", model, schedule);
  const auto rec = std::make_shared<SingularityRecord>(analyze_equilibrium(model.saddles[0], Vector::Zero(3)));
  const Subspace es = Subspace::coordinate(3, {2});
  const Subspace fs = Subspace::coordinate(3, {0, 1});
  const auto split = std::make_shared<SplittingField>(SplittingField::constant("vertical + plane", es, fs));
  const auto words = std::make_shared<PointSamples>(
      system, std::vector<Vector>{Vector::Constant(1, 0.0), Vector::Constant(1, 1.0)}, "loop words");
  // the area grows in steps along a word; fifty cycles keep the fitted slope
  // within 2e-4 of the cycle average
  const double span = 400.0;
  double saddle_time = 0.0;
  double cycle = 0.0;
  for (const auto& ps : schedule) {
    saddle_time += ps.duration;
    cycle += ps.duration + (ps.connection ? model.connection_time : 0.0);
  }

  e.checks.push_back({"singularity_domination", "singularity_domination", "E = vertical, F = plane at the saddle",
                      expect_exact(-p.c - p.ls), {},
                      [rec, es, fs](const RunOptions&) { return singularity_domination(*rec, es, fs); }});
  e.checks.push_back({"singularity_sectional_expansion", "singularity_sectional_expansion", "plane block at the saddle",
                      expect_rate(p.lu + p.ls, false), {},
                      [rec, fs](const RunOptions&) { return singularity_sectional_expansion(*rec, fs); }});
  e.checks.push_back({"uniform_contraction", "uniform_contraction", "along loop words", expect_rate(-p.c, true), {},
                      [split, words, span](const RunOptions&) { return uniform_contraction(*split, *words, span); }});
  e.checks.push_back({"sectional_expansion", "sectional_expansion", "along loop words",
                      expect_rate((p.lu + p.ls) * saddle_time / cycle, false), {},
                      [split, words, span](const RunOptions&) { return sectional_expansion(*split, *words, span); }});
  e.checks.push_back({"domination", "domination", "quotient along loop words", expect_status(Status::pass), {},
                      [split, words, span](const RunOptions&) { return domination_exponent(*split, *words, span); }});
  e.system = system;
  e.base_point = Vector::Zero(1);
  return e;
}

GalleryEntry entry_bowen_product(const BowenParams& p) {
  require(p.lu1 > 0.0 && p.lu2 > 0.0, "lu1 > 0 and lu2 > 0");
  require(p.ls1 < 0.0 && p.ls2 < 0.0, "ls1 < 0 and ls2 < 0");
  require(p.mu > 0.0, "mu > 0");
  const double contraction = std::abs(p.ls1) * std::abs(p.ls2);
  const double expansion = p.lu1 * p.lu2;
  require(contraction < expansion, "|ls1| |ls2| < lu1 lu2 (repelling cycle)");

  GalleryEntry e;
  e.name = "bowen_product";
  e.title = "Bowen heteroclinic cycle times a contracting circle";
  e.anchor = "repelling two-saddle cycle: the splitting is dominated at one saddle and not at the other";
  e.system_kind = "hybrid";
  e.parameters = {{"lu1", p.lu1}, {"ls1", p.ls1}, {"lu2", p.lu2}, {"ls2", p.ls2}, {"mu", p.mu}};
  e.constraints = {"lu1 > 0", "lu2 > 0", "ls1 < 0", "ls2 < 0", "mu > 0", "|ls1| |ls2| < lu1 lu2"};
  e.derived = {{"repeller_contraction_product", contraction},
               {"repeller_expansion_product", expansion},
               {"domination_boundary_mu", std::max(-p.ls1, -p.ls2)}};
  e.notes.push_back("repeller condition read as the product of contraction moduli over both saddles against the "
                    "product of expansion moduli");

  HybridLoopModel model;
  model.saddles.push_back(block_diag(diag({p.lu1, p.ls1}), scalar(-p.mu)));
  model.saddles.push_back(block_diag(diag({p.lu2, p.ls2}), scalar(-p.mu)));
  model.connections.push_back(block_diag(rotation(kPi / 2), scalar(std::exp(-p.mu))));
  model.connections.push_back(block_diag(rotation(-kPi / 2), scalar(std::exp(-p.mu))));
  const std::vector<Passage> schedule{{0, 2.0, 0}, {1, 2.0, 1}};
  auto system = std::make_shared<HybridSystem>("bowen_cycle", model, schedule);
  const Subspace es = Subspace::coordinate(3, {2});
  const Subspace fs = Subspace::coordinate(3, {0, 1});
  const auto split = std::make_shared<SplittingField>(SplittingField::constant("circle + plane", es, fs));
  const auto words = std::make_shared<PointSamples>(
      system, std::vector<Vector>{Vector::Constant(1, 0.0), Vector::Constant(1, 1.0)}, "cycle words");

  std::vector<std::shared_ptr<SingularityRecord>> recs;
  for (std::size_t i = 0; i < 2; ++i) {
    recs.push_back(std::make_shared<SingularityRecord>(analyze_equilibrium(model.saddles[i], Vector::Zero(3))));
  }
  const double ex1 = -p.mu - p.ls1;
  const double ex2 = -p.mu - p.ls2;
  for (std::size_t i = 0; i < 2; ++i) {
    const std::string at = "@s" + std::to_string(i + 1);
    auto rec = recs[i];
    e.checks.push_back({"singularity_domination" + at, "singularity_domination", "E = circle, F = plane",
                        expect_exact(i == 0 ? ex1 : ex2), {},
                        [rec, es, fs](const RunOptions&) { return singularity_domination(*rec, es, fs); }});
  }
  e.checks.push_back({"singularity_domination", "singularity_domination", "worst saddle of the cycle",
                      expect_exact(std::max(ex1, ex2)), {},
                      [recs, es, fs](const RunOptions&) {
                        Verdict worst;
                        for (std::size_t i = 0; i < recs.size(); ++i) {
                          Verdict v = singularity_domination(*recs[i], es, fs);
                          if (i == 0 || *v.exponent > *worst.exponent) {
                            const auto values = worst.values;
                            worst = v;
                            for (const auto& kv : values) worst.values.insert(kv);
                          }
                          worst.values["exponent_s" + std::to_string(i + 1)] = *v.exponent;
                        }
                        worst.samples = "both saddles of the cycle";
                        return worst;
                      }});
  for (std::size_t i = 0; i < 2; ++i) {
    const std::string at = "@s" + std::to_string(i + 1);
    auto lin = std::make_shared<LinearFlowSystem>(model.saddles[i], "saddle" + at);
    auto at_saddle = origin_samples(lin, "saddle");
    const double slope = i == 0 ? p.lu1 + p.ls1 : p.lu2 + p.ls2;
    e.checks.push_back({"sectional_expansion" + at, "sectional_expansion", "plane block at the saddle",
                        expect_rate(slope, false), {},
                        [split, at_saddle](const RunOptions&) { return sectional_expansion(*split, *at_saddle, 10.0); }});
  }
  e.checks.push_back({"uniform_contraction", "uniform_contraction", "along cycle words", expect_rate(-p.mu, true), {},
                      [split, words](const RunOptions&) { return uniform_contraction(*split, *words, 30.0); }});
  e.system = system;
  e.base_point = Vector::Zero(1);
  return e;
}

// ------------------------------------------------------------- suspension

std::vector<MarkedPoint> suspension_obstruction_points() {
  return {
      {"p", Vector(), block_diag(diag({0.5, 0.4}), 2.0 * rotation(1.0))},
      {"p_tilde", Vector(), block_diag(0.5 * rotation(1.0), diag({2.0, 3.0}))},
      {"q", Vector(), diag({2.0, 2.5, 3.0, 0.5})},
      {"q_tilde", Vector(), diag({0.5, 0.4, 0.3, 3.0})},
  };
}

GalleryEntry entry_suspension_obstruction() {
  const DiscreteSystemSpec base = marked_fixed_points("four_fixed_points", suspension_obstruction_points());
  std::vector<MarkedDerivative> marked;
  for (const auto& mp : base.marked_points) marked.push_back({mp.name, mp.derivative});
  const FeasibilityResult base_result = domination_index_feasibility(marked, false);
  const FeasibilityResult susp_result = domination_index_feasibility(marked, true);

  GalleryEntry e;
  e.name = "suspension_obstruction";
  e.title = "Suspension of a map with incompatible fixed points";
  e.anchor = "the base map admits a dominated splitting; its suspension with constant roof does not";
  e.system_kind = "suspension";
  e.constraints = {"p: unstable complex pair", "p_tilde: stable complex pair", "q: three expanding directions",
                   "q_tilde: three contracting directions"};
  e.derived = {{"base_common_indices", static_cast<double>(base_result.common.size())},
               {"suspension_common_indices", static_cast<double>(susp_result.common.size())}};

  e.checks.push_back({"index_feasibility", "index_feasibility", "suspension flow, flow direction included",
                      expect_status(Status::fail), {},
                      [marked](const RunOptions&) { return domination_index_feasibility(marked, true).verdict; }});
  e.checks.push_back({"index_feasibility@base", "index_feasibility", "unsuspended base map",
                      expect_status(Status::pass), {},
                      [marked](const RunOptions&) { return domination_index_feasibility(marked, false).verdict; }});

  auto system = suspend(base);
  const Subspace es = Subspace::coordinate(5, {0, 1});
  const Subspace fs = Subspace::coordinate(5, {2, 3, 4});
  const auto split = std::make_shared<SplittingField>(SplittingField::constant("stable + (unstable + flow) at p", es, fs));
  const auto at_p = std::make_shared<PointSamples>(system, std::vector<Vector>{Vector::Zero(2)}, "orbit of p");
  e.checks.push_back({"uniform_contraction@p", "uniform_contraction", "stable bundle at p",
                      expect_rate(std::log(0.5), true), {},
                      [split, at_p](const RunOptions&) { return uniform_contraction(*split, *at_p, 10.0); }});
  e.checks.push_back({"flow_in_F@p", "flow_in_F", "flow direction inside unstable + flow", expect_status(Status::pass),
                      {}, [split, at_p](const RunOptions&) {
                        return flow_in_F_residual(*split, *at_p, uniform_contraction(*split, *at_p, 10.0));
                      }});
  e.system = system;
  e.base_point = Vector::Zero(2);
  return e;
}

// --------------------------------------------------------- product diffeo

GalleryEntry entry_product_diffeo(const ProductDiffeoParams& p) {
  require(0.0 < p.ls && p.ls < 1.0, "0 < ls < 1");
  require(p.lu > 1.0, "lu > 1");
  require(p.ls * p.lu < 1.0, "ls lu < 1");
  const double c0 = p.ls * p.ls;
  const double c1 = 1.0 / p.lu;
  const double c3 = 1.0 / p.ls;
  const double c4 = p.lu * p.lu;
  require(c0 < c1 && c1 < 1.0 && 1.0 < c3 && c3 < c4, "ls^2 < 1/lu < 1 < 1/ls < lu^2");

  GalleryEntry e;
  e.name = "product_diffeo";
  e.title = "Product of two hyperbolic blocks over a cat map";
  e.anchor = "g = f1 x f2 with blocks diag(ls^2, lu^2) and diag(1/lu, 1/ls): one splitting sectional-hyperbolic, "
             "the other not dominated";
  e.system_kind = "discrete";
  e.parameters = {{"ls", p.ls}, {"lu", p.lu}};
  e.constraints = {"0 < ls < 1", "lu > 1", "ls lu < 1", "ls^2 < 1/lu < 1 < 1/ls < lu^2"};
  e.derived = {{"chain_ls2", c0}, {"chain_inv_lu", c1}, {"chain_one", 1.0}, {"chain_inv_ls", c3}, {"chain_lu2", c4}};
  e.notes.push_back("splitting-1 (E = E1) is claimed not dominated, yet its quotient decays at log(ls^2 lu) < 0 "
                    "for every admissible parameter pair; the computed verdict is reported as is");

  Matrix cat(2, 2);
  cat << 2, 1, 1, 1;
  const DiscreteSystemSpec base = torus_automorphism("cat_map", cat);
  const Matrix d = diag({c0, c4, c1, c3});  // order E1, F1, E2, F2
  auto system = std::make_shared<DiscreteSystem>(constant_cocycle_over("product_diffeo", base, d));
  std::vector<Vector> pts;
  for (const auto& xy : std::vector<std::pair<double, double>>{{0.0, 0.0}, {0.1, 0.7}, {0.3, 0.2}, {0.45, 0.85}}) {
    pts.push_back((Vector(2) << xy.first, xy.second).finished());
  }
  const auto samples = std::make_shared<PointSamples>(system, pts, "torus points");
  const double span = 20.0;
  const auto s1 = std::make_shared<SplittingField>(SplittingField::constant(
      "E1 + (F1 + E2 + F2)", Subspace::coordinate(4, {0}), Subspace::coordinate(4, {1, 2, 3})));
  const auto s2 = std::make_shared<SplittingField>(SplittingField::constant(
      "(E1 + F1) + (E2 + F2)", Subspace::coordinate(4, {0, 1}), Subspace::coordinate(4, {2, 3})));
  const double min_pair_f = std::log(c1 * c3);

  e.checks.push_back({"uniform_contraction@splitting1", "uniform_contraction", "E = E1", expect_rate(std::log(c0), true),
                      {}, [s1, samples, span](const RunOptions&) { return uniform_contraction(*s1, *samples, span); }});
  e.checks.push_back({"sectional_expansion@splitting1", "sectional_expansion", "F = F1 + E2 + F2",
                      expect_rate(min_pair_f, false), {},
                      [s1, samples, span](const RunOptions&) { return sectional_expansion(*s1, *samples, span); }});
  e.checks.push_back({"domination@splitting1", "domination", "quotient of E1 against F1 + E2 + F2",
                      expect_rate(std::log(c0 * p.lu), true),
                      {"claimed not dominated; the computed quotient decays at log(ls^2 lu)"},
                      [s1, samples, span](const RunOptions&) { return domination_exponent(*s1, *samples, span); }});
  e.checks.push_back({"domination@splitting2", "domination", "quotient of E1 + F1 against E2 + F2",
                      expect_rate(std::log(c4 * p.lu), true), {},
                      [s2, samples, span](const RunOptions&) { return domination_exponent(*s2, *samples, span); }});
  e.checks.push_back({"sectional_contraction@splitting2", "sectional_contraction", "E = E1 + F1",
                      expect_rate(std::log(c0 * c4), true), {},
                      [s2, samples, span](const RunOptions&) { return sectional_contraction(*s2, *samples, span); }});
  e.checks.push_back({"sectional_expansion@splitting2", "sectional_expansion", "F = E2 + F2",
                      expect_rate(min_pair_f, false), {},
                      [s2, samples, span](const RunOptions&) { return sectional_expansion(*s2, *samples, span); }});
  e.system = system;
  e.base_point = pts[1];
  return e;
}

// --------------------------------------------------------------- registry

std::vector<std::string> gallery_names() {
  return {"linear_saddle_3d", "linear_saddle_4d", "lorenz", "double_homoclinic",
          "bowen_product", "suspension_obstruction", "product_diffeo"};
}

ParameterSet default_parameters(const std::string& name) {
  if (name == "linear_saddle_3d") {
    const LinearSaddle3dParams p;
    return {{"l1", p.l1}, {"l2", p.l2}, {"l3", p.l3}};
  }
  if (name == "linear_saddle_4d") {
    const LinearSaddle4dParams p;
    return {{"l1", p.l1}, {"l2", p.l2}, {"l3", p.l3}, {"l4", p.l4}};
  }
  if (name == "lorenz") {
    const LorenzParams p;
    return {{"sigma", p.sigma}, {"rho", p.rho}, {"beta", p.beta}};
  }
  if (name == "double_homoclinic") {
    const DoubleHomoclinicParams p;
    return {{"c", p.c}, {"lu", p.lu}, {"ls", p.ls}};
  }
  if (name == "bowen_product") {
    const BowenParams p;
    return {{"lu1", p.lu1}, {"ls1", p.ls1}, {"lu2", p.lu2}, {"ls2", p.ls2}, {"mu", p.mu}};
  }
  if (name == "suspension_obstruction") return {};
  if (name == "product_diffeo") {
    const ProductDiffeoParams p;
    return {{"ls", p.ls}, {"lu", p.lu}};
  }
  throw GalleryError("unknown gallery entry '" + name + "'");
}

GalleryEntry make_entry(const std::string& name, const ParameterSet& overrides) {
  ParameterSet ps = default_parameters(name);
  for (const auto& [k, v] : overrides) {
    if (!ps.count(k)) throw GalleryError(name + ": unknown parameter '" + k + "'");
    if (!std::isfinite(v)) throw GalleryError(name + ": parameter '" + k + "' must be finite");
    ps[k] = v;
  }
  if (name == "linear_saddle_3d") return entry_linear_saddle_3d({ps["l1"], ps["l2"], ps["l3"]});
  if (name == "linear_saddle_4d") return entry_linear_saddle_4d({ps["l1"], ps["l2"], ps["l3"], ps["l4"]});
  if (name == "lorenz") return entry_lorenz({ps["sigma"], ps["rho"], ps["beta"]});
  if (name == "double_homoclinic") return entry_double_homoclinic({ps["c"], ps["lu"], ps["ls"]});
  if (name == "bowen_product") return entry_bowen_product({ps["lu1"], ps["ls1"], ps["lu2"], ps["ls2"], ps["mu"]});
  if (name == "suspension_obstruction") return entry_suspension_obstruction();
  return entry_product_diffeo({ps["ls"], ps["lu"]});
}

}  // namespace splitdom
