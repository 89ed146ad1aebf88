// Affine motions: the matrix ODE for the deformation A(t), its three clocks,
// the derived self-similar frame and the late-time asymptotics.
#pragma once

#include "affinelab/core.hpp"

#include <functional>
#include <limits>
#include <ostream>
#include <vector>

namespace affinelab {

/// t: physical time, s: self-similar time, tau: logarithmic time.
struct AffineState {
  double t = 0.0;
  double s = 0.0;
  double tau = 0.0;
  Mat3 A = Mat3::Identity();
  Mat3 A_dot = Mat3::Zero();
};

/// A_tt = delta det(A)^(1-gamma) A^(-T).
Mat3 affine_acceleration(const GammaParams& params, const Mat3& A);

/// 1/2 |A_dot|_HS^2 + delta/(gamma-1) det(A)^(1-gamma); conserved.
double ode_energy(const GammaParams& params, const Mat3& A, const Mat3& A_dot);

/// ds/dt = det(A)^(-(3 gamma - 1)/6).
double self_similar_rate(const GammaParams& params, const Mat3& A);

struct IntegratorOptions {
  double tol = 1e-10;
  /// Upper bound on the logarithmic-time increment of one step; keeps the
  /// cubic Hermite sampling of accepted steps accurate.
  double max_dtau = 0.05;
};

/// Accepted integrator states plus Hermite interpolation in t or tau.
/// Immutable once built.
class AffineTrajectory {
 public:
  AffineTrajectory(GammaParams params, std::vector<AffineState> samples);

  /// Closed-form trajectory backed by an exact evaluator of the state at a
  /// given tau; `samples` are only used for export.
  AffineTrajectory(GammaParams params, std::vector<AffineState> samples,
                   std::function<AffineState(double)> exact_at_tau,
                   std::function<AffineState(double)> exact_at_time);

  const GammaParams& params() const { return params_; }
  const std::vector<AffineState>& samples() const { return samples_; }
  bool closed_form() const { return static_cast<bool>(exact_at_tau_); }

  double t_final() const { return samples_.back().t; }
  double tau_final() const { return samples_.back().tau; }

  AffineState at_time(double t) const;
  AffineState at_tau(double tau) const;

 private:
  AffineState hermite(std::size_t k, double x, bool in_tau) const;

  GammaParams params_;
  std::vector<AffineState> samples_;
  std::function<AffineState(double)> exact_at_tau_;
  std::function<AffineState(double)> exact_at_time_;
};

/// Adaptive Dormand-Prince 5(4) on (A, A_dot, s, tau). Throws ConfigError on
/// invalid input and NumericalFailure on det A <= 0 or non-finite state.
AffineTrajectory integrate_affine(const GammaParams& params, const Mat3& A_init, const Mat3& Adot_init,
                                  double t_end, const IntegratorOptions& opts = {});

/// Same integrator, stopping once tau reaches tau_end.
AffineTrajectory integrate_affine_to_tau(const GammaParams& params, const Mat3& A_init,
                                         const Mat3& Adot_init, double tau_end,
                                         const IntegratorOptions& opts = {});

/// Isotropic background a(t) Id with a(0) = 1, a'(0) = 0. Exact when
/// gamma = 5/3 and delta = 1, otherwise backed by the scalar ODE
/// a'' = delta a^(2 - 3 gamma).
AffineTrajectory conformal_background(const GammaParams& params, double tau_end,
                                      const IntegratorOptions& opts = {});

struct DerivedFrame {
  double mu = 1.0;
  double mu_rate = 0.0;  // mu_tau / mu, equal to d mu / dt
  Mat3 O;
  Mat3 Lambda;
  Mat3 GammaStar;
  Mat3 GammaStar_tau;
  Mat3 Lambda_tau;
  Mat3 Lambda_tautau;
  SymEigen eig;  // Lambda = P^T diag(d) P

  /// mu^(3 gamma - 3), the inertia factor of the perturbation equation.
  double inertia(const GammaParams& params) const;
};

/// Frame quantities from one state, all tau-derivatives in closed form.
DerivedFrame derived_frame(const GammaParams& params, const AffineState& state);

/// Central difference of Lambda in tau between two neighbouring states.
Mat3 lambda_tau_central(const GammaParams& params, const AffineState& before, const AffineState& after);

struct AsymptoticsReport {
  Mat3 A1_est;
  Mat3 A0_est;
  double mu1 = 0.0;
  double mu0 = 0.0;
  double tail_growth_sup = 0.0;       // sup |M(t)|/(1+t) over the tail
  double a1_richardson_gap = 0.0;     // |A_dot(t_end/2) - A1_est| / |A1_est|
  double gamma_star_rate = 0.0;
  double lambda_tau_rate = 0.0;
  double lambda_tautau_rate = 0.0;
  double gamma_limit_residual = 0.0;  // |GammaStar - e^{-mu1 tau} mu1 A0 A1^{-1}| at t_end
  /// |t GammaStar + mu1 dev(A1^{-1} A0)| / |mu1 dev(A1^{-1} A0)| at t_end,
  /// the leading-order term obtained by expanding A = A0 + t A1 directly.
  double gamma_leading_residual = 0.0;
  double eigen_sum_sup = 0.0;         // sup of sum_i (d_i + 1/d_i)
  bool reliable = true;
};

AsymptoticsReport asymptotics_report(const AffineTrajectory& trajectory);

/// CSV columns t,s,tau,A11..A33,Adot11..Adot33,mu,det_A,ode_energy.
void write_trajectory_csv(std::ostream& out, const AffineTrajectory& trajectory);

}  // namespace affinelab
