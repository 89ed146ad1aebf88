#include "affinelab/affine_dynamics.hpp"

#include "affinelab/fit.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace affinelab {

namespace odeint = boost::numeric::odeint;

Mat3 affine_acceleration(const GammaParams& params, const Mat3& A) {
  const double det = A.determinant();
  return params.delta() * std::pow(det, 1.0 - params.gamma()) * A.inverse().transpose();
}

double ode_energy(const GammaParams& params, const Mat3& A, const Mat3& A_dot) {
  const double det = A.determinant();
  return 0.5 * A_dot.squaredNorm() +
         params.delta() / (params.gamma() - 1.0) * std::pow(det, 1.0 - params.gamma());
}

double self_similar_rate(const GammaParams& params, const Mat3& A) {
  return std::pow(A.determinant(), -(3.0 * params.gamma() - 1.0) / 6.0);
}

// ---------------------------------------------------------------- trajectory

AffineTrajectory::AffineTrajectory(GammaParams params, std::vector<AffineState> samples)
    : params_(params), samples_(std::move(samples)) {
  if (samples_.empty()) throw ConfigError("trajectory needs at least one sample");
}

AffineTrajectory::AffineTrajectory(GammaParams params, std::vector<AffineState> samples,
                                   std::function<AffineState(double)> exact_at_tau,
                                   std::function<AffineState(double)> exact_at_time)
    : params_(params),
      samples_(std::move(samples)),
      exact_at_tau_(std::move(exact_at_tau)),
      exact_at_time_(std::move(exact_at_time)) {
  if (samples_.empty()) throw ConfigError("trajectory needs at least one sample");
}

AffineState AffineTrajectory::hermite(std::size_t k, double x, bool in_tau) const {
  const AffineState& a = samples_[k];
  const AffineState& b = samples_[k + 1];
  const double x0 = in_tau ? a.tau : a.t;
  const double x1 = in_tau ? b.tau : b.t;
  const double h = x1 - x0;
  const double u = (x - x0) / h;
  const double h00 = (2.0 * u - 3.0) * u * u + 1.0;
  const double h10 = ((u - 2.0) * u + 1.0) * u;
  const double h01 = (3.0 - 2.0 * u) * u * u;
  const double h11 = (u - 1.0) * u * u;

  // Slopes with respect to t, rescaled by mu when interpolating in tau.
  const auto slopes = [&](const AffineState& st) {
    const double mu = std::cbrt(st.A.determinant());
    const double scale = in_tau ? mu : 1.0;
    struct Slope {
      Mat3 A, A_dot;
      double s, tau, t;
    };
    return Slope{scale * st.A_dot, scale * affine_acceleration(params_, st.A),
                 scale * self_similar_rate(params_, st.A), scale / mu, scale};
  };
  const auto sa = slopes(a);
  const auto sb = slopes(b);

  AffineState out;
  out.A = h00 * a.A + h10 * h * sa.A + h01 * b.A + h11 * h * sb.A;
  out.A_dot = h00 * a.A_dot + h10 * h * sa.A_dot + h01 * b.A_dot + h11 * h * sb.A_dot;
  out.s = h00 * a.s + h10 * h * sa.s + h01 * b.s + h11 * h * sb.s;
  if (in_tau) {
    out.tau = x;
    out.t = h00 * a.t + h10 * h * sa.t + h01 * b.t + h11 * h * sb.t;
  } else {
    out.t = x;
    out.tau = h00 * a.tau + h10 * h * sa.tau + h01 * b.tau + h11 * h * sb.tau;
  }
  return out;
}

namespace {

// Snaps arguments within rounding distance of the sampled range onto it.
double snap(double x, double lo, double hi) {
  const double slack = 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)});
  if (x < lo && x >= lo - slack) return lo;
  if (x > hi && x <= hi + slack) return hi;
  return x;
}

}  // namespace

AffineState AffineTrajectory::at_time(double t) const {
  if (exact_at_time_) return exact_at_time_(t);
  t = snap(t, samples_.front().t, samples_.back().t);
  if (t < samples_.front().t || t > samples_.back().t) {
    std::ostringstream msg;
    msg << "time " << t << " outside trajectory range [" << samples_.front().t << ", " << samples_.back().t << "]";
    throw ConfigError(msg.str());
  }
  if (samples_.size() == 1) return samples_.front();
  const auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                                   [](double v, const AffineState& st) { return v < st.t; });
  std::size_t k = static_cast<std::size_t>(std::distance(samples_.begin(), it));
  k = std::clamp<std::size_t>(k, 1, samples_.size() - 1) - 1;
  return hermite(k, t, false);
}

AffineState AffineTrajectory::at_tau(double tau) const {
  if (exact_at_tau_) return exact_at_tau_(tau);
  tau = snap(tau, samples_.front().tau, samples_.back().tau);
  if (tau < samples_.front().tau || tau > samples_.back().tau) {
    std::ostringstream msg;
    msg << "tau " << tau << " outside trajectory range [" << samples_.front().tau << ", " << samples_.back().tau
        << "]";
    throw ConfigError(msg.str());
  }
  if (samples_.size() == 1) return samples_.front();
  const auto it = std::upper_bound(samples_.begin(), samples_.end(), tau,
                                   [](double v, const AffineState& st) { return v < st.tau; });
  std::size_t k = static_cast<std::size_t>(std::distance(samples_.begin(), it));
  k = std::clamp<std::size_t>(k, 1, samples_.size() - 1) - 1;
  return hermite(k, tau, true);
}

// ---------------------------------------------------------------- integrator

namespace {

using OdeState = std::array<double, 20>;

void pack(const AffineState& st, OdeState& x) {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      x[static_cast<std::size_t>(3 * i + j)] = st.A(i, j);
      x[static_cast<std::size_t>(9 + 3 * i + j)] = st.A_dot(i, j);
    }
  x[18] = st.s;
  x[19] = st.tau;
}

AffineState unpack(const OdeState& x, double t) {
  AffineState st;
  st.t = t;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      st.A(i, j) = x[static_cast<std::size_t>(3 * i + j)];
      st.A_dot(i, j) = x[static_cast<std::size_t>(9 + 3 * i + j)];
    }
  st.s = x[18];
  st.tau = x[19];
  return st;
}

bool finite_state(const OdeState& x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

void validate_initial(const Mat3& A_init, const Mat3& Adot_init, const IntegratorOptions& opts) {
  if (!A_init.allFinite() || !Adot_init.allFinite()) throw ConfigError("initial matrices must be finite");
  if (!(A_init.determinant() > 0.0)) {
    std::ostringstream msg;
    msg << "det A_init must be positive (got " << A_init.determinant() << ")";
    throw ConfigError(msg.str());
  }
  if (!(opts.tol > 0.0)) throw ConfigError("integrator tolerance must be positive");
  if (!(opts.max_dtau > 0.0)) throw ConfigError("max_dtau must be positive");
}

template <typename Stop>
std::vector<AffineState> run_integrator(const GammaParams& params, const Mat3& A_init, const Mat3& Adot_init,
                                        const IntegratorOptions& opts, double t_cap, Stop stop) {
  const auto rhs = [&params](const OdeState& x, OdeState& dxdt, double /*t*/) {
    Mat3 A;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) A(i, j) = x[static_cast<std::size_t>(3 * i + j)];
    const double det = A.determinant();
    const Mat3 acc = params.delta() * std::pow(det, 1.0 - params.gamma()) * A.inverse().transpose();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        dxdt[static_cast<std::size_t>(3 * i + j)] = x[static_cast<std::size_t>(9 + 3 * i + j)];
        dxdt[static_cast<std::size_t>(9 + 3 * i + j)] = acc(i, j);
      }
    dxdt[18] = std::pow(det, -(3.0 * params.gamma() - 1.0) / 6.0);
    dxdt[19] = 1.0 / std::cbrt(det);
  };

  auto stepper = odeint::make_controlled(opts.tol, opts.tol, odeint::runge_kutta_dopri5<OdeState>());

  AffineState first;
  first.A = A_init;
  first.A_dot = Adot_init;
  std::vector<AffineState> samples{first};

  OdeState x{};
  pack(first, x);
  double t = 0.0;
  double dt = 1e-3;
  constexpr int kMaxRetries = 40;
  constexpr std::size_t kMaxSteps = 50'000'000;

  while (!stop(samples.back()) && t < t_cap) {
    if (samples.size() > kMaxSteps) throw NumericalFailure("affine integrator exceeded the step budget");
    const double mu = std::cbrt(samples.back().A.determinant());
    dt = std::min({dt, opts.max_dtau * mu, t_cap - t});

    int retries = 0;
    while (true) {
      OdeState trial = x;
      double t_trial = t;
      double dt_trial = dt;
      const auto result = stepper.try_step(rhs, trial, t_trial, dt_trial);
      if (result == odeint::success) {
        const AffineState st = unpack(trial, t_trial);
        if (finite_state(trial) && st.A.determinant() > 0.0) {
          x = trial;
          t = t_trial;
          dt = dt_trial;
          samples.push_back(st);
          break;
        }
        dt *= 0.5;
      } else {
        dt = dt_trial;
      }
      if (++retries > kMaxRetries || !(dt > 0.0) || !std::isfinite(dt)) {
        const AffineState& last = samples.back();
        std::ostringstream msg;
        msg << "affine integrator failed at t = " << last.t << " (det A = " << last.A.determinant()
            << "): step rejected repeatedly, det A <= 0 or non-finite state";
        throw NumericalFailure(msg.str());
      }
    }
  }
  return samples;
}

}  // namespace

AffineTrajectory integrate_affine(const GammaParams& params, const Mat3& A_init, const Mat3& Adot_init,
                                  double t_end, const IntegratorOptions& opts) {
  validate_initial(A_init, Adot_init, opts);
  if (!(t_end > 0.0)) throw ConfigError("t_end must be positive");
  auto samples = run_integrator(params, A_init, Adot_init, opts, t_end, [](const AffineState&) { return false; });
  return AffineTrajectory(params, std::move(samples));
}

AffineTrajectory integrate_affine_to_tau(const GammaParams& params, const Mat3& A_init, const Mat3& Adot_init,
                                         double tau_end, const IntegratorOptions& opts) {
  validate_initial(A_init, Adot_init, opts);
  if (!(tau_end > 0.0)) throw ConfigError("tau_end must be positive");
  auto samples = run_integrator(params, A_init, Adot_init, opts, std::numeric_limits<double>::infinity(),
                                [tau_end](const AffineState& st) { return st.tau >= tau_end; });
  return AffineTrajectory(params, std::move(samples));
}

// ------------------------------------------------------- conformal background

namespace {

AffineState isotropic_state(double t, double s, double tau, double a, double a_dot) {
  AffineState st;
  st.t = t;
  st.s = s;
  st.tau = tau;
  st.A = a * Mat3::Identity();
  st.A_dot = a_dot * Mat3::Identity();
  return st;
}

}  // namespace

AffineTrajectory conformal_background(const GammaParams& params, double tau_end, const IntegratorOptions& opts) {
  if (!(tau_end > 0.0)) throw ConfigError("tau_end must be positive");
  const bool exact = params.gamma() == 5.0 / 3.0 && params.delta() == 1.0;

  if (exact) {
    // a = sqrt(1+t^2) solves a'' = a^-3; then tau = asinh t, s = atan t.
    const auto at_time = [](double t) {
      const double a = std::sqrt(1.0 + t * t);
      return isotropic_state(t, std::atan(t), std::asinh(t), a, t / a);
    };
    const auto at_tau = [](double tau) {
      const double t = std::sinh(tau);
      return isotropic_state(t, std::atan(t), tau, std::cosh(tau), std::tanh(tau));
    };
    std::vector<AffineState> samples;
    const int n = std::max(2, static_cast<int>(std::ceil(tau_end / opts.max_dtau)));
    for (int k = 0; k <= n; ++k) samples.push_back(at_tau(tau_end * k / n));
    return AffineTrajectory(params, std::move(samples), at_tau, at_time);
  }

  // Scalar reduction (a, a', s, tau) of the matrix ODE.
  using Scalar4 = std::array<double, 4>;
  const double g = params.gamma();
  const double dl = params.delta();
  const auto rhs = [g, dl](const Scalar4& x, Scalar4& dxdt, double) {
    const double a = x[0];
    dxdt[0] = x[1];
    dxdt[1] = dl * std::pow(a, 2.0 - 3.0 * g);
    dxdt[2] = std::pow(a, -(3.0 * g - 1.0) / 2.0);
    dxdt[3] = 1.0 / a;
  };
  auto stepper = odeint::make_controlled(opts.tol, opts.tol, odeint::runge_kutta_dopri5<Scalar4>());
  Scalar4 x{1.0, 0.0, 0.0, 0.0};
  double t = 0.0;
  double dt = 1e-3;
  std::vector<AffineState> samples{isotropic_state(0.0, 0.0, 0.0, 1.0, 0.0)};
  while (x[3] < tau_end) {
    dt = std::min(dt, opts.max_dtau * x[0]);
    Scalar4 trial = x;
    double t_trial = t;
    double dt_trial = dt;
    if (stepper.try_step(rhs, trial, t_trial, dt_trial) == odeint::success) {
      if (!(trial[0] > 0.0) || !std::isfinite(trial[0]) || !std::isfinite(trial[1]))
        throw NumericalFailure("conformal background: scale factor left the admissible range");
      x = trial;
      t = t_trial;
      samples.push_back(isotropic_state(t, x[2], x[3], x[0], x[1]));
    }
    dt = dt_trial;
    if (!(dt > 1e-14)) throw NumericalFailure("conformal background: step size underflow");
  }
  return AffineTrajectory(params, std::move(samples));
}

// ------------------------------------------------------------- derived frame

double DerivedFrame::inertia(const GammaParams& params) const {
  return std::pow(mu, 3.0 * params.gamma() - 3.0);
}

DerivedFrame derived_frame(const GammaParams& params, const AffineState& state) {
  const Mat3& A = state.A;
  const Mat3& Ad = state.A_dot;
  const double det = A.determinant();
  if (!(det > 0.0)) throw NumericalFailure("derived frame requires det A > 0");

  DerivedFrame f;
  const Mat3 Ainv = A.inverse();
  const Mat3 Id = Mat3::Identity();
  const Mat3 AinvAd = Ainv * Ad;
  const double tr = AinvAd.trace();

  f.mu = std::cbrt(det);
  f.mu_rate = f.mu * tr / 3.0;
  f.O = A / f.mu;
  f.Lambda = f.mu * f.mu * Ainv * Ainv.transpose();
  f.Lambda = 0.5 * (f.Lambda + f.Lambda.transpose()).eval();
  f.GammaStar = f.mu * (AinvAd - (tr / 3.0) * Id);

  // O_tau = A_dot - (tr/3) A, differentiated once more through the ODE.
  const Mat3 Att = affine_acceleration(params, A);
  const double tr_t = (-AinvAd * AinvAd + Ainv * Att).trace();
  const Mat3 O_tautau = f.mu * (Att - (tr / 3.0) * Ad - (tr_t / 3.0) * A);
  const Mat3 Oinv = f.mu * Ainv;
  f.GammaStar_tau = -f.GammaStar * f.GammaStar + Oinv * O_tautau;

  const Mat3& G = f.GammaStar;
  const Mat3& L = f.Lambda;
  f.Lambda_tau = -(G * L + L * G.transpose());
  f.Lambda_tautau = -(f.GammaStar_tau * L + G * f.Lambda_tau + f.Lambda_tau * G.transpose() +
                      L * f.GammaStar_tau.transpose());
  f.eig = sym_eigen_desc(f.Lambda);
  return f;
}

Mat3 lambda_tau_central(const GammaParams& params, const AffineState& before, const AffineState& after) {
  const Mat3 lb = derived_frame(params, before).Lambda;
  const Mat3 la = derived_frame(params, after).Lambda;
  return (la - lb) / (after.tau - before.tau);
}

// ---------------------------------------------------------------- asymptotics

namespace {

Mat3 deviator(const Mat3& m) { return m - (m.trace() / 3.0) * Mat3::Identity(); }

}  // namespace

AsymptoticsReport asymptotics_report(const AffineTrajectory& trajectory) {
  const GammaParams& params = trajectory.params();
  const AffineState& last = trajectory.samples().back();
  if (last.t < 1e3) throw ConfigError("asymptotics need a trajectory reaching t >= 1e3");

  AsymptoticsReport rep;
  rep.A1_est = last.A_dot;
  rep.A0_est = last.A - last.t * rep.A1_est;
  const double det1 = rep.A1_est.determinant();
  rep.reliable = std::isfinite(det1) && det1 > 0.0;
  rep.mu1 = rep.reliable ? std::cbrt(det1) : 0.0;
  rep.mu0 = 1.5 * (params.gamma() - 1.0) * rep.mu1;
  rep.a1_richardson_gap = (trajectory.at_time(0.5 * last.t).A_dot - rep.A1_est).norm() / rep.A1_est.norm();
  if (!(rep.a1_richardson_gap < 0.05)) rep.reliable = false;

  constexpr int kSamples = 400;
  const double tau_end = last.tau;
  std::vector<double> taus, g_norm, lt_norm, ltt_norm;
  for (int k = 0; k <= kSamples; ++k) {
    const double tau = tau_end * k / kSamples;
    const AffineState st = trajectory.at_tau(tau);
    const DerivedFrame f = derived_frame(params, st);
    taus.push_back(tau);
    g_norm.push_back(f.GammaStar.norm());
    lt_norm.push_back(f.Lambda_tau.norm());
    ltt_norm.push_back(f.Lambda_tautau.norm());
    rep.eigen_sum_sup = std::max(rep.eigen_sum_sup, (f.eig.d.array() + f.eig.d.array().inverse()).sum());
    if (tau >= 0.5 * tau_end) {
      const Mat3 M = st.A - rep.A0_est - st.t * rep.A1_est;
      rep.tail_growth_sup = std::max(rep.tail_growth_sup, M.norm() / (1.0 + st.t));
    }
  }
  // Identically vanishing tails (conformal data) decay faster than any rate.
  const auto rate = [&taus](const std::vector<double>& v) {
    const bool vanishes = std::any_of(v.begin() + static_cast<long>(v.size() / 2), v.end(),
                                      [](double x) { return !(x > 0.0); });
    return vanishes ? -std::numeric_limits<double>::infinity() : decay_fit(taus, v).rate;
  };
  rep.gamma_star_rate = rate(g_norm);
  rep.lambda_tau_rate = rate(lt_norm);
  rep.lambda_tautau_rate = rate(ltt_norm);

  const DerivedFrame f_end = derived_frame(params, last);
  if (rep.reliable) {
    const Mat3 A1inv = rep.A1_est.inverse();
    rep.gamma_limit_residual =
        (f_end.GammaStar - std::exp(-rep.mu1 * tau_end) * rep.mu1 * rep.A0_est * A1inv).norm();
    const Mat3 leading = rep.mu1 * deviator(A1inv * rep.A0_est);
    const double scale = leading.norm();
    const double gap = (last.t * f_end.GammaStar + leading).norm();
    rep.gamma_leading_residual = scale > 0.0 ? gap / scale : gap;
  }
  return rep;
}

void write_trajectory_csv(std::ostream& out, const AffineTrajectory& trajectory) {
  const GammaParams& params = trajectory.params();
  out << "t,s,tau";
  for (const char* prefix : {"A", "Adot"})
    for (int i = 1; i <= 3; ++i)
      for (int j = 1; j <= 3; ++j) out << ',' << prefix << i << j;
  out << ",mu,det_A,ode_energy\n";
  out << std::setprecision(17);
  for (const AffineState& st : trajectory.samples()) {
    out << st.t << ',' << st.s << ',' << st.tau;
    for (const Mat3* m : {&st.A, &st.A_dot})
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out << ',' << (*m)(i, j);
    const double det = st.A.determinant();
    out << ',' << std::cbrt(det) << ',' << det << ',' << ode_energy(params, st.A, st.A_dot) << '\n';
  }
}

}  // namespace affinelab
