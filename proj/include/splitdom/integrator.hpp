#pragma once

// Dormand-Prince 5(4) with the 4th-order continuous extension, plus the
// trajectory and variational-equation drivers built on it.

#include "splitdom/linalg.hpp"
#include "splitdom/vector_field.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace splitdom {

struct IntegratorOptions {
  double rtol = 1e-10;
  double atol = 1e-10;
  double initial_step = 0.0;  // 0: automatic
  std::size_t max_steps = 20'000'000;
  double escape_norm = 1e8;   // applied to the state part only
};

/// Trajectory data: states at the recorded times plus step-controller stats.
struct OrbitSegment {
  Vector x0;
  std::vector<double> times;
  std::vector<Vector> states;
  double rtol = 0.0;
  double atol = 0.0;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;

  const Vector& final_state() const { return states.back(); }
};

class IntegrationError : public std::runtime_error {
 public:
  enum class Kind { escape, stiff };
  IntegrationError(Kind kind, const std::string& what, OrbitSegment partial)
      : std::runtime_error(what), kind_(kind), partial_(std::move(partial)) {}
  Kind kind() const { return kind_; }
  const OrbitSegment& partial() const { return partial_; }

 private:
  Kind kind_;
  OrbitSegment partial_;
};

/// Explicit embedded RK 5(4) stepper for autonomous systems y' = g(y).
class DormandPrince54 {
 public:
  using Rhs = std::function<void(const Vector& y, Vector& dydt)>;
  /// Called after each accepted step with (t, y). Returning false stops the
  /// current advance() at that step.
  using Observer = std::function<bool(double t, const Vector& y)>;

  DormandPrince54(Rhs rhs, IntegratorOptions opts, Eigen::Index state_dim);

  /// Advances (t, y) towards t_end (which may lie below t). Stops exactly at
  /// t_end unless the observer asks to stop earlier. Throws IntegrationError.
  void advance(double& t, Vector& y, double t_end, const Observer& observer = {});

  /// Dense output inside the most recent accepted step.
  Vector dense(double t) const;
  double last_step_start() const { return t_old_; }
  double last_step_end() const { return t_old_ + h_last_; }

  std::size_t accepted() const { return accepted_; }
  std::size_t rejected() const { return rejected_; }
  const IntegratorOptions& options() const { return opts_; }

 private:
  double initial_step(const Vector& y, const Vector& f0, double direction) const;
  double error_norm(const Vector& y0, const Vector& y1, const Vector& err) const;

  Rhs rhs_;
  IntegratorOptions opts_;
  Eigen::Index state_dim_;
  double h_ = 0.0;
  std::size_t accepted_ = 0;
  std::size_t rejected_ = 0;
  std::size_t steps_ = 0;

  // continuous extension of the last accepted step
  double t_old_ = 0.0;
  double h_last_ = 0.0;
  Vector r1_, r2_, r3_, r4_, r5_;
  Vector k_[7];
  bool fsal_valid_ = false;
};

/// Integrates x' = X(x) from x0 over time T (negative T runs the reversed
/// field; reported times are then negative). With `sample_times` empty every
/// accepted step is recorded; otherwise dense output at those times (same
/// sign as T, sorted by |t|).
OrbitSegment integrate(const VectorField& field, const Vector& x0, double T,
                       const IntegratorOptions& opts = {},
                       const std::vector<double>& sample_times = {});

/// One factor of a variational integration: fundamental matrix over
/// [t0, t1] and its inverse, integrated independently.
struct VariationalFactor {
  double t0 = 0.0;
  double t1 = 0.0;
  Vector x0;
  Vector x1;
  Matrix phi;      // D X_{t1-t0}(x0)
  Matrix phi_inv;  // D X_{t0-t1}(x1)
  double divergence_integral = 0.0;  // \int_{t0}^{t1} div X ds
};

struct VariationalResult {
  std::vector<VariationalFactor> factors;
  OrbitSegment orbit;  // checkpoint states only
};

struct VariationalOptions {
  IntegratorOptions integrator;
  double checkpoint_interval = 1.0;
  /// Extra checkpoint times in (0, T); merged with the regular grid.
  std::vector<double> extra_checkpoints;
  /// A factor is closed early when |Phi| or |Phi^{-1}| exceeds this.
  double renormalize_norm = 1e12;
};

/// Jointly integrates the state, the fundamental matrix Phi' = DX Phi
/// (Phi(0)=I), its inverse Psi' = -Psi DX and the divergence integral.
/// Phi and Psi restart at the identity at every checkpoint, so the result is
/// a chain of factors. T >= 0.
VariationalResult variational(const VectorField& field, const Vector& x0, double T,
                              const VariationalOptions& opts = {});

}  // namespace splitdom
