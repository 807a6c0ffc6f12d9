#pragma once

// Command-line front end as a library: analysis runs, parameter sweeps,
// Lyapunov runs and their reports.

#include "splitdom/config.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace splitdom {

enum ExitCode : int { kExitMatch = 0, kExitMismatch = 1, kExitUsage = 2, kExitAbstain = 3 };

struct CheckOutcome {
  const GalleryCheck* check = nullptr;
  Verdict verdict;
  bool matched = false;
  std::string error;  // set when the check threw
};

struct AnalysisRun {
  GalleryEntry entry;
  std::vector<CheckOutcome> outcomes;  // in check order
  int exit_code = kExitMatch;
  double wall_seconds = 0.0;
};

/// Runs the selected checks of the configured entry on a bounded worker
/// pool; results keep the entry's check order.
AnalysisRun run_analysis(const AnalysisConfig& cfg, int workers);

struct SweepPoint {
  double value = 0.0;
  std::optional<double> exponent;
  Status status = Status::abstain;
  std::string error;
};

struct SweepRun {
  SweepSpec spec;
  std::string entry;
  std::vector<SweepPoint> grid;
  std::vector<double> boundaries;  // sign changes located by bisection
  int exit_code = kExitMatch;
};

/// Exponent of one check over a parameter grid, with each sign change
/// bisected down to spec.resolution.
SweepRun run_sweep(const AnalysisConfig& cfg, int workers);

/// Worker count: explicit value, else SPLITDOM_WORKERS, else 1.
int resolve_workers(std::optional<int> requested);

// ---------------------------------------------------------------- reports

/// Shortest round-trip text of x with at most 17 significant digits, '.' as
/// decimal separator; "nan", "inf", "-inf" for non-finite values.
std::string format_double(double x);

nlohmann::json verdict_json(const Verdict& v);
/// Deterministic report; only the "timing" member varies between runs.
nlohmann::json analysis_report(const AnalysisConfig& cfg, const AnalysisRun& run);
nlohmann::json sweep_report(const AnalysisConfig& cfg, const SweepRun& run);
nlohmann::json lyapunov_report(const AnalysisConfig& cfg, const std::string& system, const LyapunovSpectrum& ls);

/// Flat series table with header "t,quantity,value"; quantities are prefixed
/// with the check id.
void write_series_csv(std::ostream& os, const AnalysisRun& run);

/// Human-readable gallery listing; entries whose name contains `filter`.
void list_gallery(std::ostream& os, const std::string& filter);

/// Entry point of the executable. Never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace splitdom
