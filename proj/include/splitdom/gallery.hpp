#pragma once

// Configured example systems, each with its declared splittings and the
// verdict every check is expected to reach.

#include "splitdom/criteria.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace splitdom {

/// Parameters violating an entry's eigenvalue inequalities, or unknown
/// parameter names.
class GalleryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunOptions {
  std::uint64_t seed = 1;
  /// Tolerance on expected exponents.
  double tolerance = 1e-3;
};

/// An empty status declares no expectation: the check is reported only.
struct Expectation {
  std::optional<Status> status = Status::pass;
  std::optional<double> exponent;
  /// Overrides RunOptions::tolerance for this check.
  std::optional<double> tolerance;
};

struct GalleryCheck {
  std::string id;         // unique within the entry
  std::string criterion;  // criteria operation it runs
  std::string description;
  Expectation expected;
  std::vector<std::string> flags;  // known discrepancies with the stated claim
  std::function<Verdict(const RunOptions&)> run;
};

using ParameterSet = std::map<std::string, double>;

struct GalleryEntry {
  std::string name;
  std::string title;
  std::string anchor;        // what the entry illustrates
  std::string system_kind;   // vector_field | discrete | hybrid | suspension
  ParameterSet parameters;
  std::vector<std::string> constraints;   // predicates validated at load
  std::map<std::string, double> derived;  // load-time quantities
  std::vector<std::string> notes;
  std::vector<GalleryCheck> checks;
  /// Dynamics for exponent runs, and a default base point for them.
  std::shared_ptr<const CocycleSystem> system;
  Vector base_point;

  const GalleryCheck& check(const std::string& id) const;
};

/// Whether a verdict reproduces an expectation.
bool matches(const Expectation& expected, const Verdict& v, double tolerance);

// --------------------------------------------------------------- entries

struct LinearSaddle3dParams {
  double l1 = 2.0;
  double l2 = -1.5;
  double l3 = -1.0;
};
GalleryEntry entry_linear_saddle_3d(const LinearSaddle3dParams& p = {});

struct LinearSaddle4dParams {
  double l1 = 1.5;
  double l2 = -2.0;
  double l3 = -0.5;
  double l4 = 1.0;
};
GalleryEntry entry_linear_saddle_4d(const LinearSaddle4dParams& p = {});

struct LorenzParams {
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;
};
GalleryEntry entry_lorenz(const LorenzParams& p = {});

struct DoubleHomoclinicParams {
  double c = 0.5;
  double lu = 2.0;
  double ls = -1.0;
};
GalleryEntry entry_double_homoclinic(const DoubleHomoclinicParams& p = {});

struct BowenParams {
  double lu1 = 1.2;
  double ls1 = -1.0;
  double lu2 = 1.3;
  double ls2 = -1.1;
  double mu = 1.05;
};
GalleryEntry entry_bowen_product(const BowenParams& p = {});

GalleryEntry entry_suspension_obstruction();

struct ProductDiffeoParams {
  double ls = 0.3;
  double lu = 2.0;
};
GalleryEntry entry_product_diffeo(const ProductDiffeoParams& p = {});

/// Marked fixed points of the suspension-obstruction base map.
std::vector<MarkedPoint> suspension_obstruction_points();

/// Hybrid model and cyclic schedule of the double homoclinic loop.
HybridLoopModel double_homoclinic_model(const DoubleHomoclinicParams& p = {});
std::vector<Passage> double_homoclinic_schedule();

// --------------------------------------------------------------- registry

std::vector<std::string> gallery_names();

/// Builds a named entry with parameter overrides; unknown names or
/// parameters throw GalleryError.
GalleryEntry make_entry(const std::string& name, const ParameterSet& overrides = {});

/// Default parameters of a named entry.
ParameterSet default_parameters(const std::string& name);

}  // namespace splitdom
