// Time evolution of the Lagrangian perturbation theta = eta - y in
// logarithmic time: the nonlinear radial reduction over a conformal
// background and the linearised system in 3D over a general affine background.
#pragma once

#include "affinelab/affine_dynamics.hpp"
#include "affinelab/ball_calculus.hpp"

#include <functional>
#include <memory>
#include <ostream>
#include <vector>

namespace affinelab {

/// State at one tau. Radial fields store the profile vartheta(r) of
/// theta = vartheta(r) y/|y|; 3D fields store theta on every grid node
/// (zero on inactive nodes).
template <class Field>
struct Snapshot {
  double tau = 0.0;
  Field theta;
  Field V;
  DerivedFrame frame;
};

using RadialSnapshot = Snapshot<ScalarField>;
using CartesianSnapshot = Snapshot<VectorField>;

struct SolverConfig {
  double cfl = 0.4;
  double tau_end = 8.0;
  double output_every = 0.05;
  long max_steps = 0;          // stop after this many steps when positive
  bool keep_snapshots = true;  // otherwise only the initial and final states are kept
  double blowup_factor = 10.0;
  double min_step = 1e-8;

  void validate() const;
};

struct StepStats {
  long steps = 0;
  double dtau_initial = 0.0;
  double dtau_final = 0.0;
  double max_increment = 0.0;  // sup over steps of the max-norm change of (theta, V)
  double min_jacobian = 1.0;   // radial solver only
  double monitor_initial = 0.0;
  double monitor_peak = 0.0;
};

template <class Field>
struct Run {
  std::vector<Snapshot<Field>> snapshots;
  StepStats stats;
};

using RadialRun = Run<ScalarField>;
using CartesianRun = Run<VectorField>;

template <class Field>
using SnapshotObserver = std::function<void(const Snapshot<Field>&)>;

/// Growth functional for the instability detector; evaluated at every
/// output time. The run aborts with NumericalFailure when it exceeds
/// blowup_factor times its initial value and gamma <= 5/3.
template <class Field>
using MonitorFunctional = std::function<double(const Snapshot<Field>&)>;

/// Nonlinear radial equation for R = r + vartheta:
///   mu^(3g-3) (R_tt + (mu_t/mu) R_t) + delta R
///     + (R/r)^2 w^-alpha d_r(w^(1+alpha) J^-gamma) = 0,  J = R^2 R_r / r^2,
/// finite-volume in r with the pressure flux w^(1+alpha) (J^-gamma - 1), which
/// vanishes at r = 1 and makes R = r a discrete steady state. RK4 in tau.
/// Throws ConfigError unless the background has Lambda = Id, NumericalFailure
/// on J <= 0 or instability.
RadialRun solve_radial(const GammaParams& params, std::shared_ptr<const AffineTrajectory> background,
                       const RadialGrid& grid, ScalarField theta0, ScalarField V0, const SolverConfig& cfg,
                       const SnapshotObserver<ScalarField>& observer = {},
                       const MonitorFunctional<ScalarField>& monitor = {});

/// Linearised system
///   m (V_t + (mu_t/mu) V + 2 GammaStar V) mu^(3g-3) + delta m Lambda theta
///     - Lambda d_k(w^(1+alpha) (d_j theta_k + delta_jk div theta / alpha)) = 0
/// with node weight m = cell average of w^alpha. Fluxes live on faces between
/// active nodes with w^(1+alpha) evaluated at the face; faces touching
/// inactive nodes carry no flux. RK4 in tau.
CartesianRun solve_linear3d(const GammaParams& params, std::shared_ptr<const AffineTrajectory> background,
                            const CartesianGrid& grid, VectorField theta0, VectorField V0, const SolverConfig& cfg,
                            const SnapshotObserver<VectorField>& observer = {},
                            const MonitorFunctional<VectorField>& monitor = {});

/// Cell average of w^alpha over each grid cell (3-point Gauss per axis,
/// clipped to the ball); zero on inactive nodes.
ScalarField node_inertia_weights(const CartesianGrid& grid);

/// Default monitor: int w^alpha (mu^(3g-3) |V|^2 + delta |theta|^2)
/// (+ int w^(1+alpha) |D theta|^2 in 3D, + radial analogue).
double default_monitor(const RadialGrid& grid, const GammaParams& params, const RadialSnapshot& snap);
double default_monitor(const CartesianGrid& grid, const GammaParams& params, const CartesianSnapshot& snap);

/// (int w^k |f|^2)^(1/2).
double weighted_l2(const RadialGrid& grid, const ScalarField& f, double k);
double weighted_l2(const CartesianGrid& grid, const VectorField& f, double k);

/// Smooth data vanishing like (1 - r^2)^2 at the boundary: an irrotational
/// part, a rotation about the y3 axis and a shear; V0 mixes the same
/// profiles. Scaled by `amplitude`.
struct CartesianData {
  VectorField theta;
  VectorField V;
};
CartesianData polynomial_initial_data(const CartesianGrid& grid, double amplitude);

/// vartheta(r) y/|y| on the 3D grid, linear interpolation in r.
VectorField embed_radial(const CartesianGrid& grid, const RadialGrid& radial, const ScalarField& profile);

/// Residual ladder |theta(tau_k) - theta_inf| in the w^alpha norm on
/// tau_k = start * ratio^k, with theta_inf the final snapshot.
struct AttractorReport {
  std::vector<double> ladder_tau;
  std::vector<double> residual;
  bool monotone = false;          // non-increasing along the ladder
  double envelope_rate = 0.0;     // fitted log-slope of the ladder, report only
  double predicted_rate = 0.0;    // -(3 gamma - 3) mu0 / 2
};

AttractorReport attractor_estimate(const RadialGrid& grid, const GammaParams& params,
                                   const std::vector<RadialSnapshot>& series, double start = 1.0,
                                   double ratio = 1.4142135623730951);
AttractorReport attractor_estimate(const CartesianGrid& grid, const GammaParams& params,
                                   const std::vector<CartesianSnapshot>& series, double start = 1.0,
                                   double ratio = 1.4142135623730951);

/// CSV columns tau,r,theta,V.
void write_radial_csv(std::ostream& out, const RadialGrid& grid, const std::vector<RadialSnapshot>& series);
/// CSV columns tau,x,y,z,theta1,theta2,theta3,V1,V2,V3 over active nodes.
void write_cartesian_csv(std::ostream& out, const CartesianGrid& grid, const std::vector<CartesianSnapshot>& series);

}  // namespace affinelab
