#include "splitdom/cli.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <thread>

namespace splitdom {

namespace {

using nlohmann::json;

constexpr const char* kVersion = "1.0.0";

// Runs job(i) for i in [0, n) on at most `workers` threads. Jobs must not
// throw.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& job) {
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(threads, n); ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) job(i);
    });
  }
  for (auto& th : pool) th.join();
}

json number_or_null(std::optional<double> x) {
  if (!x || !std::isfinite(*x)) return nullptr;
  return *x;
}

json vector_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number_or_null(v(i)));
  return a;
}

json expectation_json(const Expectation& e) {
  json j = json::object();
  j["status"] = e.status ? json(to_string(*e.status)) : json(nullptr);
  j["exponent"] = number_or_null(e.exponent);
  if (e.tolerance) j["tolerance"] = *e.tolerance;
  return j;
}

json settings_json(const AnalysisConfig& cfg) {
  return {{"seed", cfg.seed},
          {"tolerance", cfg.tolerance},
          {"slope_threshold", kSlopeThreshold},
          {"invariance_tolerance", kInvarianceTol},
          {"transient_cut", kTransientCut},
          {"finite_time_threshold", kFiniteTimeThreshold},
          {"subadditivity_eps", kSubadditivityEps}};
}

json entry_json(const GalleryEntry& e) {
  json j = {{"name", e.name},     {"title", e.title},           {"anchor", e.anchor},
            {"kind", e.system_kind}, {"constraints", e.constraints}, {"notes", e.notes}};
  j["parameters"] = json::object();
  for (const auto& [k, v] : e.parameters) j["parameters"][k] = v;
  j["derived"] = json::object();
  for (const auto& [k, v] : e.derived) j["derived"][k] = number_or_null(v);
  return j;
}

json config_echo(const AnalysisConfig& cfg) {
  json j = cfg.echo.is_object() ? cfg.echo : json::object();
  if (cfg.entry) j["entry"] = *cfg.entry;
  if (!cfg.parameters.empty()) {
    j["parameters"] = json::object();
    for (const auto& [k, v] : cfg.parameters) j["parameters"][k] = v;
  }
  if (!cfg.criteria.empty()) j["criteria"] = cfg.criteria;
  j["seed"] = cfg.seed;
  j["tolerance"] = cfg.tolerance;
  j.erase("output");
  j.erase("workers");
  return j;
}

json stamp(double seconds) { return {{"wall_seconds", seconds}}; }

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
  f << s;
}

std::filesystem::path prepare_out(const std::string& dir) {
  std::filesystem::path p(dir);
  std::filesystem::create_directories(p);
  return p;
}

int exit_code_for(const std::vector<CheckOutcome>& outcomes) {
  bool mismatch = false;
  bool abstain = false;
  for (const auto& o : outcomes) {
    if (o.matched) continue;
    if (o.verdict.status == Status::abstain) {
      abstain = true;
    } else {
      mismatch = true;
    }
  }
  if (mismatch) return kExitMismatch;
  if (abstain) return kExitAbstain;
  return kExitMatch;
}

std::string describe_exponent(const std::optional<double>& x) { return x ? format_double(*x) : "-"; }

}  // namespace

int resolve_workers(std::optional<int> requested) {
  if (requested) return std::max(1, *requested);
  if (const char* env = std::getenv("SPLITDOM_WORKERS")) {
    int n = 0;
    const char* end = env + std::strlen(env);
    const auto [ptr, ec] = std::from_chars(env, end, n);
    if (ec == std::errc() && ptr == end && n >= 1) return n;
  }
  return 1;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

json verdict_json(const Verdict& v) {
  json j;
  j["criterion"] = v.criterion;
  j["status"] = to_string(v.status);
  j["exponent"] = number_or_null(v.exponent);
  j["constant"] = number_or_null(v.constant);
  j["fit_residual"] = number_or_null(v.fit_residual);
  j["samples"] = v.samples;
  j["span"] = v.span;
  j["values"] = json::object();
  for (const auto& [k, x] : v.values) j["values"][k] = number_or_null(x);
  j["notes"] = v.notes;
  if (v.witness) {
    j["witness"] = {{"point", vector_json(v.witness->point)},
                    {"time", v.witness->time},
                    {"value", number_or_null(v.witness->value)},
                    {"quantity", v.witness->quantity}};
  } else {
    j["witness"] = nullptr;
  }
  return j;
}

AnalysisRun run_analysis(const AnalysisConfig& cfg, int workers) {
  const auto t0 = std::chrono::steady_clock::now();
  AnalysisRun run;
  run.entry = resolve_entry(cfg);
  const auto selected = select_checks(run.entry, cfg.criteria);
  run.outcomes.resize(selected.size());
  std::vector<std::exception_ptr> config_errors(selected.size());
  const RunOptions opts{cfg.seed, cfg.tolerance};
  parallel_for(selected.size(), workers, [&](std::size_t i) {
    CheckOutcome& o = run.outcomes[i];
    o.check = selected[i];
    try {
      o.verdict = o.check->run(opts);
    } catch (const std::invalid_argument&) {
      config_errors[i] = std::current_exception();
      return;
    } catch (const std::exception& e) {
      o.error = e.what();
      o.verdict.criterion = o.check->criterion;
      o.verdict.status = Status::abstain;
      o.verdict.notes.push_back(std::string("numerical failure: ") + e.what());
    }
    o.matched = matches(o.check->expected, o.verdict, cfg.tolerance);
  });
  for (const auto& ep : config_errors) {
    if (!ep) continue;
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("check rejected its inputs: ") + e.what());
    }
  }
  run.exit_code = exit_code_for(run.outcomes);
  run.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

json analysis_report(const AnalysisConfig& cfg, const AnalysisRun& run) {
  json r;
  r["tool"] = {{"name", "splitdom"}, {"version", kVersion}};
  r["config"] = config_echo(cfg);
  r["settings"] = settings_json(cfg);
  r["entry"] = entry_json(run.entry);
  json checks = json::array();
  std::size_t matched = 0;
  std::size_t abstained = 0;
  for (const auto& o : run.outcomes) {
    json c = {{"id", o.check->id},
              {"criterion", o.check->criterion},
              {"description", o.check->description},
              {"expected", expectation_json(o.check->expected)},
              {"flags", o.check->flags},
              {"verdict", verdict_json(o.verdict)},
              {"match", o.matched}};
    if (!o.error.empty()) c["error"] = o.error;
    matched += o.matched ? 1 : 0;
    abstained += o.verdict.status == Status::abstain ? 1 : 0;
    checks.push_back(std::move(c));
  }
  r["checks"] = checks;
  r["summary"] = {{"checks", run.outcomes.size()},
                  {"matched", matched},
                  {"mismatched", run.outcomes.size() - matched},
                  {"abstained", abstained},
                  {"exit_code", run.exit_code}};
  r["timing"] = stamp(run.wall_seconds);
  return r;
}

void write_series_csv(std::ostream& os, const AnalysisRun& run) {
  os << "t,quantity,value\n";
  for (const auto& o : run.outcomes) {
    for (const auto& s : o.verdict.series) {
      os << format_double(s.t) << ',' << o.check->id << '/' << s.quantity << ',' << format_double(s.value) << '\n';
    }
  }
}

SweepRun run_sweep(const AnalysisConfig& cfg, int workers) {
  if (!cfg.sweep) throw ConfigError("config: sweep needs a 'sweep' block");
  if (!cfg.entry) throw ConfigError("config: sweeps run over gallery entries");
  SweepRun run;
  run.spec = *cfg.sweep;
  run.entry = *cfg.entry;
  const SweepSpec& sp = run.spec;
  try {
    const ParameterSet defaults = default_parameters(run.entry);
    if (!defaults.count(sp.parameter)) {
      throw ConfigError("config: entry '" + run.entry + "' has no parameter '" + sp.parameter + "'");
    }
    // the check must exist at the default parameters
    make_entry(run.entry, cfg.parameters).check(sp.check);
  } catch (const GalleryError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  const RunOptions opts{cfg.seed, cfg.tolerance};
  auto evaluate = [&](double value) {
    SweepPoint pt;
    pt.value = value;
    ParameterSet ps = cfg.parameters;
    ps[sp.parameter] = value;
    try {
      const GalleryEntry e = make_entry(run.entry, ps);
      const Verdict v = e.check(sp.check).run(opts);
      pt.exponent = v.exponent;
      pt.status = v.status;
    } catch (const std::exception& ex) {
      pt.error = ex.what();
    }
    return pt;
  };

  run.grid.resize(static_cast<std::size_t>(sp.points));
  parallel_for(run.grid.size(), workers, [&](std::size_t i) {
    const double value = sp.from + (sp.to - sp.from) * static_cast<double>(i) / static_cast<double>(sp.points - 1);
    run.grid[i] = evaluate(value);
  });

  std::vector<std::pair<std::size_t, std::size_t>> brackets;
  std::optional<std::size_t> prev;
  for (std::size_t i = 0; i < run.grid.size(); ++i) {
    if (!run.grid[i].exponent || !std::isfinite(*run.grid[i].exponent)) continue;
    if (prev) {
      const double a = *run.grid[*prev].exponent;
      const double b = *run.grid[i].exponent;
      // a zero on the grid is its own bracket, reported once
      const bool last = i + 1 == run.grid.size();
      if (a == 0.0 || (b != 0.0 && (a < 0.0) != (b < 0.0))) brackets.emplace_back(*prev, i);
      if (b == 0.0 && last) brackets.emplace_back(i, i);
    }
    prev = i;
  }
  run.boundaries.resize(brackets.size());
  std::atomic<bool> bisection_failed = false;
  parallel_for(brackets.size(), workers, [&](std::size_t k) {
    double lo = run.grid[brackets[k].first].value;
    double hi = run.grid[brackets[k].second].value;
    double f_lo = *run.grid[brackets[k].first].exponent;
    if (f_lo == 0.0) {
      run.boundaries[k] = lo;
      return;
    }
    while (hi - lo > sp.resolution) {
      const double mid = 0.5 * (lo + hi);
      const SweepPoint m = evaluate(mid);
      if (!m.exponent || !std::isfinite(*m.exponent)) {
        bisection_failed = true;
        break;
      }
      if (*m.exponent == 0.0) {
        lo = hi = mid;
        break;
      }
      if ((*m.exponent < 0.0) == (f_lo < 0.0)) {
        lo = mid;
        f_lo = *m.exponent;
      } else {
        hi = mid;
      }
    }
    run.boundaries[k] = 0.5 * (lo + hi);
  });

  bool missing = bisection_failed;
  for (const auto& pt : run.grid) missing = missing || !pt.exponent;
  run.exit_code = missing ? kExitAbstain : kExitMatch;
  if (sp.expected_boundary) {
    const bool hit = std::any_of(run.boundaries.begin(), run.boundaries.end(),
                                 [&](double b) { return std::abs(b - *sp.expected_boundary) <= sp.resolution; });
    if (!hit) run.exit_code = kExitMismatch;
  }
  return run;
}

json sweep_report(const AnalysisConfig& cfg, const SweepRun& run) {
  json r;
  r["tool"] = {{"name", "splitdom"}, {"version", kVersion}};
  r["config"] = config_echo(cfg);
  r["settings"] = settings_json(cfg);
  r["sweep"] = {{"entry", run.entry},
                {"parameter", run.spec.parameter},
                {"check", run.spec.check},
                {"from", run.spec.from},
                {"to", run.spec.to},
                {"points", run.spec.points},
                {"resolution", run.spec.resolution}};
  json grid = json::array();
  for (const auto& pt : run.grid) {
    json g = {{"value", pt.value}, {"exponent", number_or_null(pt.exponent)}, {"status", to_string(pt.status)}};
    if (!pt.error.empty()) {
      g["status"] = nullptr;
      g["error"] = pt.error;
    }
    grid.push_back(std::move(g));
  }
  r["grid"] = grid;
  r["boundaries"] = run.boundaries;
  r["summary"] = {{"crossings", run.boundaries.size()}, {"exit_code", run.exit_code}};
  return r;
}

json lyapunov_report(const AnalysisConfig& cfg, const std::string& system, const LyapunovSpectrum& ls) {
  json r;
  r["tool"] = {{"name", "splitdom"}, {"version", kVersion}};
  r["config"] = config_echo(cfg);
  r["system"] = system;
  r["base_point"] = vector_json(ls.base_point);
  r["span"] = ls.span;
  json ex = json::array();
  double sum = 0.0;
  for (double x : ls.exponents) {
    ex.push_back(number_or_null(x));
    sum += x;
  }
  r["exponents"] = ex;
  r["sum"] = sum;
  r["divergence_average"] = number_or_null(ls.divergence_average);
  r["converged"] = ls.converged;
  r["convergence_change"] = number_or_null(ls.convergence_change);
  r["fit_residual"] = ls.fit_residual;
  return r;
}

void list_gallery(std::ostream& os, const std::string& filter) {
  for (const auto& name : gallery_names()) {
    if (!filter.empty() && name.find(filter) == std::string::npos) continue;
    const GalleryEntry e = make_entry(name);
    os << name << " - " << e.title << "\n  " << e.anchor << "\n";
    if (!e.parameters.empty()) {
      os << "  parameters:";
      for (const auto& [k, v] : e.parameters) os << ' ' << k << '=' << format_double(v);
      os << '\n';
    }
    if (!e.constraints.empty()) {
      os << "  constraints:";
      for (const auto& c : e.constraints) os << " [" << c << ']';
      os << '\n';
    }
    for (const auto& c : e.checks) {
      os << "    " << std::left << std::setw(40) << c.id << ' ' << std::setw(15)
         << (c.expected.status ? to_string(*c.expected.status) : "-") << ' '
         << describe_exponent(c.expected.exponent);
      for (const auto& f : c.flags) os << "  (flag: " << f << ')';
      os << '\n';
    }
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical checks of dominated splittings, sectional hyperbolicity and related criteria"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1, 1);

  struct Common {
    std::string config;
    std::string entry;
    std::vector<std::string> criteria;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<double> tol;
  };
  Common common;
  auto add_common = [&](CLI::App* sub, bool with_criteria) {
    sub->add_option("--config", common.config, "configuration file (JSON)");
    sub->add_option("--entry", common.entry, "gallery entry name");
    if (with_criteria) sub->add_option("--criterion", common.criteria, "check id or criterion name (repeatable)");
    sub->add_option("--out", common.out, "output directory for reports and series");
    sub->add_option("--seed", common.seed, "random seed");
    sub->add_option("--workers", common.workers, "worker threads (default: SPLITDOM_WORKERS or 1)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--tol", common.tol, "tolerance on expected exponents")->check(CLI::PositiveNumber);
  };

  std::string filter;
  CLI::App* list = app.add_subcommand("list", "list gallery entries and their expected verdicts");
  list->add_option("filter", filter, "substring of entry names");
  CLI::App* analyze = app.add_subcommand("analyze", "run the checks of an entry or configured system");
  add_common(analyze, true);
  CLI::App* sweep = app.add_subcommand("sweep", "sweep one parameter and locate sign changes of an exponent");
  add_common(sweep, false);
  CLI::App* lyap = app.add_subcommand("lyapunov", "Lyapunov spectrum along one orbit");
  add_common(lyap, false);

  try {
    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitMatch : kExitUsage;
  }

  try {
    if (list->parsed()) {
      list_gallery(out, filter);
      return kExitMatch;
    }
    AnalysisConfig cfg;
    if (!common.config.empty()) cfg = load_config(common.config);
    if (!common.entry.empty()) {
      cfg.entry = common.entry;
      cfg.inline_system.reset();
    }
    if (!common.criteria.empty()) cfg.criteria = common.criteria;
    if (common.seed) cfg.seed = *common.seed;
    if (common.tol) cfg.tolerance = *common.tol;
    if (!common.out.empty()) cfg.out = common.out;
    const int workers = resolve_workers(common.workers ? common.workers : cfg.workers);
    if (!cfg.entry && !cfg.inline_system) throw ConfigError("give --entry NAME or --config PATH");

    if (analyze->parsed()) {
      const AnalysisRun run = run_analysis(cfg, workers);
      out << run.entry.name << '\n';
      for (const auto& o : run.outcomes) {
        out << "  " << std::left << std::setw(40) << o.check->id << ' ' << std::setw(15)
            << to_string(o.verdict.status) << " exponent " << std::setw(24) << describe_exponent(o.verdict.exponent)
            << " expected "
            << (o.check->expected.status ? to_string(*o.check->expected.status) : std::string("-")) << ' '
            << describe_exponent(o.check->expected.exponent) << (o.matched ? "  ok" : "  MISMATCH") << '\n';
      }
      if (cfg.out) {
        const auto dir = prepare_out(*cfg.out);
        write_text(dir / "report.json", analysis_report(cfg, run).dump(2) + "\n");
        std::ofstream csv(dir / "series.csv", std::ios::binary);
        write_series_csv(csv, run);
      }
      out << "exit " << run.exit_code << '\n';
      return run.exit_code;
    }
    if (sweep->parsed()) {
      const SweepRun run = run_sweep(cfg, workers);
      out << run.entry << ": " << run.spec.check << " over " << run.spec.parameter << '\n';
      for (const auto& pt : run.grid) {
        out << "  " << std::left << std::setw(24) << format_double(pt.value) << ' '
            << (pt.error.empty() ? describe_exponent(pt.exponent) + "  " + to_string(pt.status) : "error: " + pt.error)
            << '\n';
      }
      for (double b : run.boundaries) out << "  boundary " << format_double(b) << '\n';
      if (run.boundaries.empty()) out << "  no sign change\n";
      if (cfg.out) {
        const auto dir = prepare_out(*cfg.out);
        write_text(dir / "sweep.json", sweep_report(cfg, run).dump(2) + "\n");
      }
      out << "exit " << run.exit_code << '\n';
      return run.exit_code;
    }
    // lyapunov
    const GalleryEntry entry = resolve_entry(cfg);
    if (!entry.system) throw ConfigError("entry '" + entry.name + "' has no dynamics for exponent runs");
    Vector x0 = cfg.lyapunov.x0.value_or(entry.base_point);
    if (x0.size() != entry.system->state_dim()) throw ConfigError("config: lyapunov.x0 has the wrong dimension");
    if (cfg.lyapunov.transient > 0.0) x0 = entry.system->segment(x0, cfg.lyapunov.transient).end_point();
    const LyapunovSpectrum ls = lyapunov_spectrum(*entry.system, x0, cfg.lyapunov.span);
    out << entry.name << ": T = " << format_double(ls.span) << '\n';
    for (std::size_t i = 0; i < ls.exponents.size(); ++i) {
      out << "  lambda_" << i + 1 << " = " << format_double(ls.exponents[i]) << '\n';
    }
    if (ls.divergence_average) out << "  divergence average " << format_double(*ls.divergence_average) << '\n';
    out << "  converged " << (ls.converged ? "yes" : "no") << '\n';
    if (cfg.out) {
      const auto dir = prepare_out(*cfg.out);
      write_text(dir / "lyapunov.json", lyapunov_report(cfg, entry.name, ls).dump(2) + "\n");
      std::ofstream csv(dir / "series.csv", std::ios::binary);
      csv << "t,quantity,value\n";
      for (std::size_t j = 0; j < ls.history_times.size(); ++j) {
        for (std::size_t i = 0; i < ls.history[j].size(); ++i) {
          csv << format_double(ls.history_times[j]) << ",running_exponent_" << i + 1 << ','
              << format_double(ls.history[j][i]) << '\n';
        }
      }
    }
    return kExitMatch;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitAbstain;
  }
}

}  // namespace splitdom
