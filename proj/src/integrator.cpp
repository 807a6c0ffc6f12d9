#include "splitdom/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace splitdom {

namespace {

// Dormand & Prince (1980) coefficients.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                 a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
// continuous extension (Hairer, Norsett & Wanner, DOPRI5 contd5)
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

constexpr double kSafety = 0.9;
constexpr double kFacMin = 0.2;
constexpr double kFacMax = 10.0;

double rms_scaled(const Vector& v, const Vector& scale) {
  return std::sqrt((v.array() / scale.array()).square().mean());
}

}  // namespace

DormandPrince54::DormandPrince54(Rhs rhs, IntegratorOptions opts, Eigen::Index state_dim)
    : rhs_(std::move(rhs)), opts_(opts), state_dim_(state_dim) {
  if (!(opts_.rtol > 0.0) || !(opts_.atol > 0.0)) {
    throw std::invalid_argument("integrator tolerances must be positive");
  }
  h_ = std::abs(opts_.initial_step);
}

double DormandPrince54::error_norm(const Vector& y0, const Vector& y1, const Vector& err) const {
  const Vector scale =
      (opts_.atol + opts_.rtol * y0.cwiseAbs().cwiseMax(y1.cwiseAbs()).array()).matrix();
  return rms_scaled(err, scale);
}

double DormandPrince54::initial_step(const Vector& y, const Vector& f0, double direction) const {
  const Vector scale = (opts_.atol + opts_.rtol * y.cwiseAbs().array()).matrix();
  const double d0 = rms_scaled(y, scale);
  const double dd1 = rms_scaled(f0, scale);
  double h0 = (d0 < 1e-5 || dd1 < 1e-5) ? 1e-6 : 0.01 * d0 / dd1;
  Vector y1 = y + direction * h0 * f0;
  Vector f1(y.size());
  rhs_(y1, f1);
  const double dd2 = rms_scaled(f1 - f0, scale) / h0;
  const double dmax = std::max(dd1, dd2);
  const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
  return std::min(100.0 * h0, h1);
}

void DormandPrince54::advance(double& t, Vector& y, double t_end, const Observer& observer) {
  if (t == t_end) return;
  const double direction = t_end > t ? 1.0 : -1.0;
  const Eigen::Index n = y.size();
  for (auto& k : k_) k.resize(n);
  rhs_(y, k_[0]);
  if (h_ <= 0.0) h_ = initial_step(y, k_[0], direction);

  double h = direction * h_;
  bool just_rejected = false;
  Vector ytmp(n);
  Vector ynew(n);
  Vector err(n);

  for (;;) {
    if (++steps_ > opts_.max_steps) {
      throw IntegrationError(IntegrationError::Kind::stiff, "stiff: step budget exhausted", {});
    }
    const double remaining = t_end - t;
    const double h_proposed = h;
    bool last = false;
    if (std::abs(h) >= std::abs(remaining)) {
      h = remaining;
      last = true;
    }

    ytmp = y + h * a21 * k_[0];
    rhs_(ytmp, k_[1]);
    ytmp = y + h * (a31 * k_[0] + a32 * k_[1]);
    rhs_(ytmp, k_[2]);
    ytmp = y + h * (a41 * k_[0] + a42 * k_[1] + a43 * k_[2]);
    rhs_(ytmp, k_[3]);
    ytmp = y + h * (a51 * k_[0] + a52 * k_[1] + a53 * k_[2] + a54 * k_[3]);
    rhs_(ytmp, k_[4]);
    ytmp = y + h * (a61 * k_[0] + a62 * k_[1] + a63 * k_[2] + a64 * k_[3] + a65 * k_[4]);
    rhs_(ytmp, k_[5]);
    ynew = y + h * (a71 * k_[0] + a73 * k_[2] + a74 * k_[3] + a75 * k_[4] + a76 * k_[5]);
    rhs_(ynew, k_[6]);
    err = h * (e1 * k_[0] + e3 * k_[2] + e4 * k_[3] + e5 * k_[4] + e6 * k_[5] + e7 * k_[6]);

    double en = error_norm(y, ynew, err);
    if (!std::isfinite(en) || !ynew.allFinite()) en = std::numeric_limits<double>::infinity();

    if (en <= 1.0) {
      ++accepted_;
      const Vector ydiff = ynew - y;
      const Vector bspl = h * k_[0] - ydiff;
      r1_ = y;
      r2_ = ydiff;
      r3_ = bspl;
      r4_ = ydiff - h * k_[6] - bspl;
      r5_ = h * (d1 * k_[0] + d3 * k_[2] + d4 * k_[3] + d5 * k_[4] + d6 * k_[5] + d7 * k_[6]);
      t_old_ = t;
      h_last_ = h;
      t = last ? t_end : t + h;
      y = ynew;
      k_[0] = k_[6];

      if (y.head(state_dim_).norm() > opts_.escape_norm) {
        throw IntegrationError(IntegrationError::Kind::escape, "escape: state norm exceeded " +
                                                                    std::to_string(opts_.escape_norm), {});
      }
      double fac = en == 0.0 ? kFacMax : std::clamp(kSafety * std::pow(en, -0.2), kFacMin, kFacMax);
      if (just_rejected) fac = std::min(fac, 1.0);
      just_rejected = false;
      const double h_next = (last ? h_proposed : h) * fac;
      h_ = std::abs(last ? std::max(std::abs(h_proposed), std::abs(h_next)) : h_next);
      if (observer && !observer(t, y)) return;
      if (last) return;
      h = h_next;
    } else {
      ++rejected_;
      just_rejected = true;
      const double fac = std::isfinite(en) ? std::max(kFacMin, kSafety * std::pow(en, -0.2)) : kFacMin;
      h *= fac;
      if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(t))) {
        throw IntegrationError(IntegrationError::Kind::stiff,
                               "stiff: step size underflow at t=" + std::to_string(t), {});
      }
    }
  }
}

Vector DormandPrince54::dense(double t) const {
  const double theta = (t - t_old_) / h_last_;
  const double theta1 = 1.0 - theta;
  return r1_ + theta * (r2_ + theta1 * (r3_ + theta * (r4_ + theta1 * r5_)));
}

OrbitSegment integrate(const VectorField& field, const Vector& x0, double T,
                       const IntegratorOptions& opts, const std::vector<double>& sample_times) {
  if (x0.size() != field.dim()) throw std::invalid_argument("initial point has wrong dimension");
  if (!std::isfinite(T)) throw std::invalid_argument("integration time must be finite");
  const bool backward = T < 0.0;
  const VectorField& f = field;
  const VectorField rev = backward ? field.reversed() : field;
  const VectorField& active = backward ? rev : f;
  const double sign = backward ? -1.0 : 1.0;
  const double span = std::abs(T);

  std::vector<double> samples;
  samples.reserve(sample_times.size());
  for (double s : sample_times) {
    const double a = sign * s;
    if (a < 0.0 || a > span * (1.0 + 1e-12)) {
      throw std::invalid_argument("sample time outside the integration span");
    }
    samples.push_back(std::min(a, span));
  }
  if (!std::is_sorted(samples.begin(), samples.end())) {
    throw std::invalid_argument("sample times must be ordered");
  }

  OrbitSegment seg;
  seg.x0 = x0;
  seg.rtol = opts.rtol;
  seg.atol = opts.atol;

  std::size_t next = 0;
  auto record = [&](double t, const Vector& y) {
    seg.times.push_back(sign * t);
    seg.states.push_back(y);
  };
  if (samples.empty()) {
    record(0.0, x0);
  } else {
    while (next < samples.size() && samples[next] == 0.0) record(samples[next++], x0);
  }

  DormandPrince54 stepper(
      [&active](const Vector& y, Vector& dy) { dy = active(y); }, opts, x0.size());
  double t = 0.0;
  Vector y = x0;
  auto observer = [&](double tt, const Vector& yy) {
    if (samples.empty()) {
      record(tt, yy);
    } else {
      while (next < samples.size() && samples[next] <= tt) {
        record(samples[next], samples[next] == tt ? yy : stepper.dense(samples[next]));
        ++next;
      }
    }
    return true;
  };
  try {
    stepper.advance(t, y, span, observer);
  } catch (const IntegrationError& e) {
    seg.accepted_steps = stepper.accepted();
    seg.rejected_steps = stepper.rejected();
    throw IntegrationError(e.kind(), e.what(), std::move(seg));
  }
  seg.accepted_steps = stepper.accepted();
  seg.rejected_steps = stepper.rejected();
  return seg;
}

VariationalResult variational(const VectorField& field, const Vector& x0, double T,
                              const VariationalOptions& opts) {
  if (!(T >= 0.0) || !std::isfinite(T)) {
    throw std::invalid_argument("variational integration needs a finite T >= 0");
  }
  if (!(opts.checkpoint_interval > 0.0)) throw std::invalid_argument("checkpoint interval must be positive");
  const int n = field.dim();
  if (x0.size() != n) throw std::invalid_argument("initial point has wrong dimension");
  const Eigen::Index nn = static_cast<Eigen::Index>(n) * n;

  std::vector<double> checkpoints;
  for (double c = opts.checkpoint_interval; c < T * (1.0 - 1e-12); c += opts.checkpoint_interval) {
    checkpoints.push_back(c);
  }
  for (double c : opts.extra_checkpoints) {
    if (c > 0.0 && c < T) checkpoints.push_back(c);
  }
  if (T > 0.0) checkpoints.push_back(T);
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end(),
                                [](double a, double b) { return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(b)); }),
                    checkpoints.end());

  auto rhs = [&field, n, nn](const Vector& y, Vector& dy) {
    const Vector x = y.head(n);
    const Matrix j = field.jacobian(x);
    dy.head(n) = field(x);
    Eigen::Map<const Matrix> phi(y.data() + n, n, n);
    Eigen::Map<const Matrix> psi(y.data() + n + nn, n, n);
    Eigen::Map<Matrix>(dy.data() + n, n, n) = j * phi;
    Eigen::Map<Matrix>(dy.data() + n + nn, n, n) = -psi * j;
    dy(n + 2 * nn) = j.trace();
  };

  Vector y(n + 2 * nn + 1);
  auto reset = [&] {
    Eigen::Map<Matrix>(y.data() + n, n, n).setIdentity();
    Eigen::Map<Matrix>(y.data() + n + nn, n, n).setIdentity();
    y(n + 2 * nn) = 0.0;
  };
  y.head(n) = x0;
  reset();

  VariationalResult result;
  result.orbit.x0 = x0;
  result.orbit.rtol = opts.integrator.rtol;
  result.orbit.atol = opts.integrator.atol;
  result.orbit.times.push_back(0.0);
  result.orbit.states.push_back(x0);

  DormandPrince54 stepper(rhs, opts.integrator, n);
  auto observer = [&](double, const Vector& yy) {
    const double phi_norm = Eigen::Map<const Matrix>(yy.data() + n, n, n).norm();
    const double psi_norm = Eigen::Map<const Matrix>(yy.data() + n + nn, n, n).norm();
    return phi_norm <= opts.renormalize_norm && psi_norm <= opts.renormalize_norm;
  };

  double t = 0.0;
  try {
    for (double target : checkpoints) {
      while (t < target) {
        const double start = t;
        const Vector start_state = y.head(n);
        stepper.advance(t, y, target, observer);
        VariationalFactor f;
        f.t0 = start;
        f.t1 = t;
        f.x0 = start_state;
        f.x1 = y.head(n);
        f.phi = Eigen::Map<const Matrix>(y.data() + n, n, n);
        f.phi_inv = Eigen::Map<const Matrix>(y.data() + n + nn, n, n);
        f.divergence_integral = y(n + 2 * nn);
        result.factors.push_back(std::move(f));
        result.orbit.times.push_back(t);
        result.orbit.states.push_back(y.head(n));
        reset();
      }
    }
  } catch (const IntegrationError& e) {
    result.orbit.accepted_steps = stepper.accepted();
    result.orbit.rejected_steps = stepper.rejected();
    throw IntegrationError(e.kind(), e.what(), std::move(result.orbit));
  }
  result.orbit.accepted_steps = stepper.accepted();
  result.orbit.rejected_steps = stepper.rejected();
  return result;
}

}  // namespace splitdom
