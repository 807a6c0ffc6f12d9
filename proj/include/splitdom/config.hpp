#pragma once

// Declarative analysis configuration (JSON) and its translation into a
// runnable set of checks.

#include "splitdom/gallery.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace splitdom {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SweepSpec {
  std::string parameter;
  double from = 0.0;
  double to = 0.0;
  int points = 9;
  std::string check;  // check id whose exponent is swept
  double resolution = 1e-3;
  std::optional<double> expected_boundary;
};

struct LyapunovSpec {
  std::optional<Vector> x0;
  double span = 500.0;
  double transient = 0.0;
};

struct AnalysisConfig {
  std::optional<std::string> entry;
  ParameterSet parameters;
  std::optional<nlohmann::json> inline_system;  // whole config object when no entry is named
  std::vector<std::string> criteria;            // check ids or criterion names; empty selects all
  std::uint64_t seed = 1;
  double tolerance = 1e-3;
  std::optional<std::string> out;
  std::optional<int> workers;
  std::optional<SweepSpec> sweep;
  LyapunovSpec lyapunov;
  nlohmann::json echo;  // effective configuration as reported
};

/// Parses a configuration document; every problem throws ConfigError.
AnalysisConfig parse_config(const nlohmann::json& doc);
AnalysisConfig load_config(const std::string& path);

/// The entry a configuration refers to: a gallery entry with parameter
/// overrides, or an inline system with its declared checks.
GalleryEntry resolve_entry(const AnalysisConfig& cfg);

/// Builds an entry from an inline definition:
///   system:     {type: linear, matrix: [[...]]} | {type: lorenz, sigma, rho, beta}
///   splitting:  {E: [[v...]...], F: [[v...]...]} spanning vectors
///   singularity: [x...]  (optional, refined by Newton)
///   samples:    {points: [[...]], random: {count, center, radius}}
///   span, time_grid, time_pairs
///   checks:     [{criterion, expect, exponent, tolerance}]
GalleryEntry inline_entry(const nlohmann::json& doc, std::uint64_t seed);

/// Checks of `entry` selected by ids or criterion names; unknown names throw
/// ConfigError.
std::vector<const GalleryCheck*> select_checks(const GalleryEntry& entry, const std::vector<std::string>& names);

}  // namespace splitdom
