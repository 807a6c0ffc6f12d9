#include "splitdom/config.hpp"

#include "splitdom/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace splitdom {

namespace {

using nlohmann::json;

const std::set<std::string> kTopLevelKeys = {
    "entry", "parameters", "criteria", "seed", "tolerance", "output", "workers", "sweep", "lyapunov",
    "system", "splitting", "singularity", "samples", "span", "time_grid", "time_pairs", "checks"};

const std::set<std::string> kInlineKeys = {"system", "splitting", "singularity", "samples",
                                           "span", "time_grid", "time_pairs", "checks"};

[[noreturn]] void fail(const std::string& what) { throw ConfigError("config: " + what); }

double number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where + " must be a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) fail(where + " must be finite");
  return x;
}

double positive(const json& j, const std::string& where) {
  const double x = number(j, where);
  if (!(x > 0.0)) fail(where + " must be positive");
  return x;
}

std::string text(const json& j, const std::string& where) {
  if (!j.is_string()) fail(where + " must be a string");
  return j.get<std::string>();
}

Vector vector_of(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where + " must be a nonempty array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], where);
  return v;
}

// Row-major matrix literal.
Matrix matrix_of(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where + " must be a nonempty array of rows");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  Matrix m;
  for (std::size_t r = 0; r < rows; ++r) {
    const Vector row = vector_of(j[r], where);
    if (r == 0) {
      cols = static_cast<std::size_t>(row.size());
      m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    }
    if (static_cast<std::size_t>(row.size()) != cols) fail(where + " rows must have equal length");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

// Spanning vectors, one per array element, as matrix columns.
Subspace subspace_of(const json& j, int n, const std::string& where) {
  const Matrix rows = matrix_of(j, where);
  if (rows.cols() != n) fail(where + " vectors must have the system dimension");
  try {
    return Subspace(rows.transpose());
  } catch (const LinalgError&) {
    fail(where + " vectors must be linearly independent");
  }
}

struct InlineContext {
  std::string name;
  std::shared_ptr<const CocycleSystem> system;
  std::optional<VectorField> field;
  std::optional<SplittingField> split;
  std::optional<SingularityRecord> rec;
  std::shared_ptr<PointSamples> samples;
  double span = 10.0;
  std::vector<double> grid;
  std::vector<TimePair> pairs;
};

const SplittingField& need_split(const InlineContext& c, const std::string& criterion) {
  if (!c.split) fail("criterion '" + criterion + "' needs a splitting");
  return *c.split;
}

const SingularityRecord& need_rec(const InlineContext& c, const std::string& criterion) {
  if (!c.rec) fail("criterion '" + criterion + "' needs a singularity");
  return *c.rec;
}

std::function<Verdict(const RunOptions&)> make_runner(const std::string& criterion,
                                                      std::shared_ptr<const InlineContext> c) {
  const std::string where = "criterion '" + criterion + "'";
  if (criterion == "domination") {
    need_split(*c, criterion);
    return [c](const RunOptions&) { return domination_exponent(*c->split, *c->samples, c->span); };
  }
  if (criterion == "finite_time_domination") {
    need_split(*c, criterion);
    return [c](const RunOptions&) { return finite_time_domination(*c->split, *c->samples, c->grid); };
  }
  if (criterion == "uniform_contraction") {
    need_split(*c, criterion);
    return [c](const RunOptions&) { return uniform_contraction(*c->split, *c->samples, c->span); };
  }
  if (criterion == "sectional_expansion") {
    if (need_split(*c, criterion).dim_f() < 2) fail(where + ": sectional expansion undefined (dim F < 2)");
    return [c](const RunOptions&) { return sectional_expansion(*c->split, *c->samples, c->span); };
  }
  if (criterion == "sectional_contraction") {
    if (need_split(*c, criterion).dim_e() < 2) fail(where + ": sectional contraction undefined (dim E < 2)");
    return [c](const RunOptions&) { return sectional_contraction(*c->split, *c->samples, c->span); };
  }
  if (criterion == "flow_in_F") {
    need_split(*c, criterion);
    return [c](const RunOptions&) {
      return flow_in_F_residual(*c->split, *c->samples, uniform_contraction(*c->split, *c->samples, c->span));
    };
  }
  if (criterion == "subadditivity_phi" || criterion == "subadditivity_psi") {
    const Family fam = criterion == "subadditivity_phi" ? Family::phi : Family::psi;
    if (fam == Family::psi && need_split(*c, criterion).dim_f() < 2) fail(where + " needs dim F >= 2");
    need_split(*c, criterion);
    return [c, fam](const RunOptions&) { return subadditivity_check(fam, *c->split, *c->samples, c->pairs); };
  }
  if (criterion == "lyapunov_spectrum") {
    return [c](const RunOptions&) {
      return lyapunov_verdict(lyapunov_spectrum(*c->system, c->samples->point(0), c->span));
    };
  }
  if (criterion.rfind("singularity_", 0) == 0) {
    const SingularityRecord& rec = need_rec(*c, criterion);
    const Splitting s = need_split(*c, criterion).at(rec.location);
    if (criterion == "singularity_domination") {
      return [c, s](const RunOptions&) { return singularity_domination(*c->rec, s.e, s.f); };
    }
    if (criterion == "singularity_contraction") {
      return [c, s](const RunOptions&) { return singularity_contraction(*c->rec, s.e); };
    }
    if (criterion == "singularity_sectional_expansion") {
      if (s.f.dim() < 2) fail(where + ": sectional expansion undefined (dim F < 2)");
      return [c, s](const RunOptions&) { return singularity_sectional_expansion(*c->rec, s.f); };
    }
    if (criterion == "singularity_sectional_contraction") {
      if (s.e.dim() < 2) fail(where + ": sectional contraction undefined (dim E < 2)");
      return [c, s](const RunOptions&) { return singularity_sectional_contraction(*c->rec, s.e); };
    }
  }
  fail("unknown " + where);
}

}  // namespace

AnalysisConfig parse_config(const json& doc) {
  if (!doc.is_object()) fail("document must be an object");
  for (const auto& [k, _] : doc.items()) {
    if (!kTopLevelKeys.count(k)) fail("unknown key '" + k + "'");
  }
  AnalysisConfig cfg;
  cfg.echo = doc;
  if (doc.contains("entry")) cfg.entry = text(doc["entry"], "entry");
  if (doc.contains("system")) {
    if (cfg.entry) fail("give either 'entry' or an inline 'system', not both");
    json inl = json::object();
    for (const auto& [k, v] : doc.items()) {
      if (kInlineKeys.count(k)) inl[k] = v;
    }
    cfg.inline_system = inl;
  } else {
    for (const auto& [k, _] : doc.items()) {
      if (kInlineKeys.count(k)) fail("'" + k + "' needs an inline 'system'");
    }
  }
  if (doc.contains("parameters")) {
    const json& p = doc["parameters"];
    if (!p.is_object()) fail("parameters must be an object");
    for (const auto& [k, v] : p.items()) cfg.parameters[k] = number(v, "parameters." + k);
  }
  if (doc.contains("criteria")) {
    const json& c = doc["criteria"];
    if (!c.is_array()) fail("criteria must be an array of names");
    for (const auto& x : c) cfg.criteria.push_back(text(x, "criteria[]"));
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) fail("seed must be a nonnegative integer");
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("tolerance")) cfg.tolerance = positive(doc["tolerance"], "tolerance");
  if (doc.contains("output")) cfg.out = text(doc["output"], "output");
  if (doc.contains("workers")) {
    if (!doc["workers"].is_number_integer() || doc["workers"].get<int>() < 1) fail("workers must be a positive integer");
    cfg.workers = doc["workers"].get<int>();
  }
  if (doc.contains("sweep")) {
    const json& s = doc["sweep"];
    if (!s.is_object()) fail("sweep must be an object");
    SweepSpec sp;
    for (const char* key : {"parameter", "from", "to", "check"}) {
      if (!s.contains(key)) fail(std::string("sweep.") + key + " is required");
    }
    sp.parameter = text(s["parameter"], "sweep.parameter");
    sp.from = number(s["from"], "sweep.from");
    sp.to = number(s["to"], "sweep.to");
    sp.check = text(s["check"], "sweep.check");
    if (s.contains("points")) {
      if (!s["points"].is_number_integer()) fail("sweep.points must be an integer");
      sp.points = s["points"].get<int>();
    }
    if (s.contains("resolution")) sp.resolution = positive(s["resolution"], "sweep.resolution");
    if (s.contains("expect_boundary")) sp.expected_boundary = number(s["expect_boundary"], "sweep.expect_boundary");
    if (!(sp.from < sp.to)) fail("sweep range is empty (need from < to)");
    if (sp.points < 2) fail("sweep needs at least two points");
    cfg.sweep = sp;
  }
  if (doc.contains("lyapunov")) {
    const json& l = doc["lyapunov"];
    if (!l.is_object()) fail("lyapunov must be an object");
    if (l.contains("x0")) cfg.lyapunov.x0 = vector_of(l["x0"], "lyapunov.x0");
    if (l.contains("T")) cfg.lyapunov.span = positive(l["T"], "lyapunov.T");
    if (l.contains("transient")) {
      cfg.lyapunov.transient = number(l["transient"], "lyapunov.transient");
      if (cfg.lyapunov.transient < 0.0) fail("lyapunov.transient must be nonnegative");
    }
  }
  return cfg;
}

AnalysisConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: parse error in '" + path + "': " + e.what());
  }
  return parse_config(doc);
}

GalleryEntry inline_entry(const json& doc, std::uint64_t seed) {
  auto c = std::make_shared<InlineContext>();
  if (!doc.contains("system") || !doc["system"].is_object()) fail("system must be an object");
  const json& sys = doc["system"];
  const std::string type = text(sys.value("type", json("")), "system.type");
  c->name = sys.contains("name") ? text(sys["name"], "system.name") : "inline_" + type;
  ParameterSet params;
  if (type == "linear") {
    if (!sys.contains("matrix")) fail("system.matrix is required for linear systems");
    const Matrix a = matrix_of(sys["matrix"], "system.matrix");
    if (a.rows() != a.cols()) fail("system.matrix must be square");
    c->field = linear_field(a, c->name);
  } else if (type == "lorenz") {
    const LorenzParams d;
    const double sigma = sys.contains("sigma") ? number(sys["sigma"], "system.sigma") : d.sigma;
    const double rho = sys.contains("rho") ? number(sys["rho"], "system.rho") : d.rho;
    const double beta = sys.contains("beta") ? number(sys["beta"], "system.beta") : d.beta;
    c->field = lorenz_field(sigma, rho, beta);
    params = {{"sigma", sigma}, {"rho", rho}, {"beta", beta}};
  } else {
    fail("system.type must be 'linear' or 'lorenz'");
  }
  c->system = std::make_shared<FlowSystem>(*c->field);
  const int n = c->field->dim();

  if (doc.contains("splitting")) {
    const json& s = doc["splitting"];
    if (!s.is_object() || !s.contains("E") || !s.contains("F")) fail("splitting needs E and F");
    const Subspace e = subspace_of(s["E"], n, "splitting.E");
    const Subspace f = subspace_of(s["F"], n, "splitting.F");
    if (e.dim() + f.dim() != n) fail("splitting: dim E + dim F must equal the system dimension");
    try {
      c->split = SplittingField::constant("declared", e, f);
      c->split->at(Vector::Zero(n));
    } catch (const DegenerateSplitting&) {
      fail("splitting: E and F are not transversal");
    }
  }
  if (doc.contains("singularity")) {
    const Vector guess = vector_of(doc["singularity"], "singularity");
    if (guess.size() != n) fail("singularity must have the system dimension");
    try {
      c->rec = refine_singularity(*c->field, guess);
    } catch (const SingularityError& e) {
      fail(std::string("singularity: ") + e.what());
    }
  }

  std::vector<Vector> points;
  if (doc.contains("samples")) {
    const json& s = doc["samples"];
    if (!s.is_object()) fail("samples must be an object");
    if (s.contains("points")) {
      const json& pts = s["points"];
      if (!pts.is_array()) fail("samples.points must be an array");
      for (const auto& p : pts) {
        Vector v = vector_of(p, "samples.points[]");
        if (v.size() != n) fail("sample points must have the system dimension");
        points.push_back(std::move(v));
      }
    }
    if (s.contains("random")) {
      const json& r = s["random"];
      if (!r.is_object() || !r.contains("count") || !r["count"].is_number_unsigned()) {
        fail("samples.random needs a nonnegative integer count");
      }
      const auto count = r["count"].get<std::size_t>();
      const Vector center = r.contains("center") ? vector_of(r["center"], "samples.random.center") : Vector::Zero(n);
      if (center.size() != n) fail("samples.random.center must have the system dimension");
      const double radius = r.contains("radius") ? positive(r["radius"], "samples.random.radius") : 1.0;
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> u(-radius, radius);
      for (std::size_t k = 0; k < count; ++k) {
        Vector v = center;
        for (int i = 0; i < n; ++i) v(i) += u(rng);
        points.push_back(std::move(v));
      }
    }
  }
  if (points.empty()) {
    if (!c->rec) fail("samples are required when no singularity is given");
    points.push_back(c->rec->location);
  }
  c->samples = std::make_shared<PointSamples>(c->system, points, "configured points");
  if (doc.contains("span")) c->span = positive(doc["span"], "span");
  if (doc.contains("time_grid")) {
    const Vector g = vector_of(doc["time_grid"], "time_grid");
    c->grid.assign(g.data(), g.data() + g.size());
    if (!std::is_sorted(c->grid.begin(), c->grid.end()) || !(c->grid.front() > 0.0)) {
      fail("time_grid must be positive and increasing");
    }
  } else {
    c->grid = geometric_time_grid(c->span);
  }
  if (doc.contains("time_pairs")) {
    const json& tp = doc["time_pairs"];
    if (!tp.is_array() || tp.empty()) fail("time_pairs must be a nonempty array of [s, t]");
    for (const auto& p : tp) {
      if (!p.is_array() || p.size() != 2) fail("time_pairs entries must be [s, t]");
      c->pairs.push_back({positive(p[0], "time_pairs[][0]"), positive(p[1], "time_pairs[][1]")});
    }
  } else {
    c->pairs = {{1.0, 1.0}, {1.0, 2.0}, {2.0, 1.0}};
  }

  if (!doc.contains("checks") || !doc["checks"].is_array() || doc["checks"].empty()) {
    fail("checks must be a nonempty array");
  }
  GalleryEntry e;
  e.name = c->name;
  e.title = "Configured " + type + " system";
  e.anchor = "inline definition";
  e.system_kind = "vector_field";
  e.parameters = params;
  e.system = c->system;
  e.base_point = points.front();
  std::shared_ptr<const InlineContext> ctx = c;
  std::map<std::string, int> seen;
  for (const auto& ch : doc["checks"]) {
    if (!ch.is_object() || !ch.contains("criterion")) fail("each check needs a criterion");
    for (const auto& [k, _] : ch.items()) {
      if (k != "criterion" && k != "id" && k != "expect" && k != "exponent" && k != "tolerance") {
        fail("unknown check key '" + k + "'");
      }
    }
    GalleryCheck gc;
    gc.criterion = text(ch["criterion"], "checks[].criterion");
    std::string id = ch.contains("id") ? text(ch["id"], "checks[].id") : gc.criterion;
    if (const int k = seen[id]++; k > 0) id += "#" + std::to_string(k + 1);
    gc.id = id;
    gc.description = "configured check";
    gc.expected.status = std::nullopt;
    if (ch.contains("expect")) {
      const auto st = parse_status(text(ch["expect"], "checks[].expect"));
      if (!st) fail("checks[].expect must be pass, fail, abstain or not_applicable");
      gc.expected.status = *st;
    }
    if (ch.contains("exponent")) {
      if (!gc.expected.status) fail("checks[].exponent needs an expected status");
      gc.expected.exponent = number(ch["exponent"], "checks[].exponent");
    }
    if (ch.contains("tolerance")) gc.expected.tolerance = positive(ch["tolerance"], "checks[].tolerance");
    gc.run = make_runner(gc.criterion, ctx);
    e.checks.push_back(std::move(gc));
  }
  return e;
}

GalleryEntry resolve_entry(const AnalysisConfig& cfg) {
  if (cfg.entry) {
    try {
      return make_entry(*cfg.entry, cfg.parameters);
    } catch (const GalleryError& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  if (cfg.inline_system) {
    if (!cfg.parameters.empty()) fail("parameters apply to gallery entries only");
    return inline_entry(*cfg.inline_system, cfg.seed);
  }
  fail("no entry or inline system given");
}

std::vector<const GalleryCheck*> select_checks(const GalleryEntry& entry, const std::vector<std::string>& names) {
  std::vector<const GalleryCheck*> out;
  if (names.empty()) {
    for (const auto& c : entry.checks) out.push_back(&c);
    return out;
  }
  std::set<const GalleryCheck*> chosen;
  for (const auto& name : names) {
    bool any = false;
    for (const auto& c : entry.checks) {
      if (c.id == name || c.criterion == name) {
        chosen.insert(&c);
        any = true;
      }
    }
    if (!any) fail("entry '" + entry.name + "' has no check or criterion named '" + name + "'");
  }
  for (const auto& c : entry.checks) {
    if (chosen.count(&c)) out.push_back(&c);
  }
  return out;
}

}  // namespace splitdom
