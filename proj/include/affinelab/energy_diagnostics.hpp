// Weighted norms, energies, dissipation and vorticity functionals evaluated
// on solver states, together with the algebraic and functional-inequality
// checks they rest on: the diagonalised trace identity behind the energy, the
// transport law of the Lagrangian curl, and Hardy/embedding inequalities.
#pragma once

#include "affinelab/fit.hpp"
#include "affinelab/perturbation_solver.hpp"

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace affinelab {

/// Which part of the partition of unity weights an integral: the boundary
/// cutoff psi, its complement 1 - psi, or both (weight 1).
enum class Side { Boundary, Interior, Whole };

/// Linearized: D_eta = D, J = 1 (quadratic in the fields). Nonlinear: D_eta
/// and J from the flow map eta = y + theta.
enum class EvalMode { Linearized, Nonlinear };

/// Highest composite order available on the grid.
inline constexpr int kMaxOrder = 2;

/// int phi w^k |f|^2 with midpoint quadrature over active nodes.
double weighted_norm(const CartesianGrid& grid, const ScalarField& f, double k, Side side);
double weighted_norm(const CartesianGrid& grid, const VectorField& f, double k, Side side);
double weighted_norm(const CartesianGrid& grid, const MatrixField& f, double k, Side side);
/// Radial profile f(r): 4 pi sum r^2 phi w^k f^2 dr.
double weighted_norm(const RadialGrid& grid, const ScalarField& f, double k, Side side);

/// sum_kl d_k / d_l (P M P^T)_kl^2 with Lambda = P^T diag(d) P.
double anisotropic_square(const Mat3& M, const SymEigen& eig);

/// One composite derivative: d_r^a angular^beta on the boundary side, or a
/// Cartesian d^nu on the interior side. Squared weighted norms of the
/// composite applied to V and theta, of D_eta and div_eta of the composite
/// of theta, and of the Lagrangian curl of both composites.
struct IndexEntry {
  std::string label;
  Side side = Side::Boundary;
  int radial = 0;                 // a
  std::array<int, 3> multi{};     // beta or nu
  double velocity = 0.0;
  double displacement = 0.0;
  double gradient = 0.0;
  double divergence = 0.0;
  double curl_velocity = 0.0;
  double curl_displacement = 0.0;
};

/// Instantaneous functionals at one tau (no sup over time).
struct NormReport {
  double tau = 0.0;
  int order = 0;
  std::vector<IndexEntry> entries;
  double norm = 0.0;               // S^N
  double vorticity_velocity = 0.0; // B^N[V]
  double vorticity_displacement = 0.0;
  double energy = 0.0;             // E^N
  double dissipation = 0.0;        // D^N
};

/// All composites of total order <= `order` in the fixed ordering
/// d_r^a angular_1^b1 angular_2^b2 angular_3^b3 and d_1^n1 d_2^n2 d_3^n3.
NormReport norm_report(const CartesianGrid& grid, const GammaParams& params, const CartesianSnapshot& snap,
                       int order, EvalMode mode = EvalMode::Linearized);

double s_norm(const CartesianGrid& grid, const GammaParams& params, const CartesianSnapshot& snap, int order,
              EvalMode mode = EvalMode::Linearized);

struct EnergyPair {
  double energy = 0.0;
  double dissipation = 0.0;
};
EnergyPair energy_and_dissipation(const CartesianGrid& grid, const GammaParams& params, const CartesianSnapshot& snap,
                                  int order, EvalMode mode = EvalMode::Linearized);

/// (5 - 3 gamma) / 2 mu^(3 gamma - 3) mu_tau / mu.
double dissipation_prefactor(const GammaParams& params, const DerivedFrame& frame);

/// Zeroth-order functionals of a radial state theta = vartheta(r) y/|y| over a
/// conformal background, evaluated nonlinearly (D eta has eigenvalues R_r and
/// R/r twice). The curl of a radial field vanishes.
NormReport radial_norm_report(const RadialGrid& grid, const GammaParams& params, const RadialSnapshot& snap);

/// Ratio E/S along a run, dissipation sign and the largest energy growth
/// max_{s <= t} E(t)/E(s).
struct RunDiagnostics {
  std::vector<NormReport> reports;
  double ratio_min = 0.0;
  double ratio_max = 0.0;
  double ratio_spread = 0.0;
  bool dissipation_nonnegative = true;
  double energy_growth = 0.0;
};
RunDiagnostics diagnose_run(const CartesianGrid& grid, const GammaParams& params,
                            const std::vector<CartesianSnapshot>& series, int order,
                            EvalMode mode = EvalMode::Linearized);
RunDiagnostics diagnose_run(const RadialGrid& grid, const GammaParams& params,
                            const std::vector<RadialSnapshot>& series);

/// Smooth synthetic paths for the trace identity
///   Tr(Lambda M Lambda^-1 M_tau^T) = 1/2 d/dtau sum d_k/d_l Mt_kl^2
///     - 1/2 sum (d_k/d_l)_tau Mt_kl^2 - Tr(Q Mt Q^-1 (P_tau P^T Mt^T + Mt^T P P_tau^T)),
/// Mt = P M P^T, Q = diag(d).
struct MatrixPath {
  std::function<Mat3(double)> M;
  std::function<Mat3(double)> Lambda;
};

/// Seeded path: M polynomial plus trigonometric in tau, Lambda = exp(S(tau))
/// with S symmetric traceless and well-separated eigenvalues.
MatrixPath random_matrix_path(std::uint64_t seed);

struct KeyIdentityReport {
  double max_residual = 0.0;
  double max_lhs = 0.0;
  int samples = 0;
};

/// Evaluates both sides at `samples` points of [tau_lo, tau_hi] with
/// fourth-order central differences of step dtau; eigenframes along each
/// stencil are matched to the centre. Throws NumericalFailure when two
/// eigenvalues of Lambda come within `min_gap` on a stencil.
KeyIdentityReport key_identity_check(const MatrixPath& path, double tau_lo, double tau_hi, int samples,
                                     double dtau = 1e-3, double min_gap = 1e-3);

/// Transport law of the linearised Lagrangian curl along a 3D run:
///   Curl V(t) = mu(0) Curl V(0) / mu + (1/mu) int mu [d_tau, Curl] V
///               - (2/mu) int mu Curl(GammaStar V),
/// with [d_tau, Curl] F = Curl computed with Lambda_tau in place of Lambda.
/// Integrals by the trapezoid rule over the snapshots.
struct CurlTransportReport {
  std::vector<double> tau;
  std::vector<double> residual;    // |lhs - rhs| / |lhs| in the w^(alpha+1) norm
  std::vector<double> vorticity;   // B^0[V] instantaneous
  double max_residual = 0.0;
  double max_residual_half_cadence = 0.0;
  bool quadrature_dominated = false;
  DecayFit vorticity_fit;          // of B^0[V], divided by 1 + tau^2 when gamma = 5/3
  double predicted_rate = 0.0;     // -2 mu0
};
CurlTransportReport curl_transport_check(const CartesianGrid& grid, const GammaParams& params,
                                         const std::vector<CartesianSnapshot>& series);

/// One-dimensional Hardy inequality on (0, 1):
///   k > -1:  int (1-r)^k g^2 <= C int (1-r)^(k+2) (g^2 + g'^2),
///   k < -1:  int (1-r)^k (g - g(1))^2 <= C int (1-r)^(k+2) g'^2.
struct HardyCase {
  std::string name;
  double k = 0.0;
  std::function<double(double)> g;
  std::function<double(double)> dg;
};

struct HardyResult {
  std::string name;
  double k = 0.0;
  double lhs = 0.0;           // tanh-sinh quadrature
  double rhs = 0.0;
  double constant = 0.0;      // lhs / rhs
  double constant_coarse = 0.0;  // midpoint rule, `cells`
  double constant_fine = 0.0;    // midpoint rule, 4 * `cells`
  bool finite = false;
  bool stable = false;        // fine and coarse within `tolerance` of each other
};

std::vector<HardyCase> default_hardy_family();
std::vector<HardyResult> hardy_check(const std::vector<HardyCase>& cases, int cells = 256, double tolerance = 0.25);

/// Weighted inequalities on the ball for a scalar test function u:
///   Hardy:     ||u||^2_{k,psi} <= C sum_{j <= ceil(alpha - k)} ||d_r^j u||^2_{alpha+j,psi}
///   embedding: sup_{1/4 < r < 1} |u| <= C (sum_{a+|b| <= 2} ||d_r^a angular^b u||_{a+alpha,psi}
///                                           + sum_{|nu| <= 2} ||d^nu u||_{alpha,1-psi})
/// The sup is sampled from u itself on a fixed set of the closed annulus. The
/// embedding is evaluated at composite order 2, below the order the
/// inequality needs in general, so its constant is reported as empirical.
struct EmbeddingCase {
  std::string name;
  std::function<double(const Vec3&)> u;
  double k = 0.0;
};

struct EmbeddingResult {
  std::string name;
  double hardy_coarse = 0.0;
  double hardy_fine = 0.0;
  double embedding_coarse = 0.0;
  double embedding_fine = 0.0;
  bool finite = false;
  bool stable = false;
};

std::vector<EmbeddingCase> default_embedding_family();
std::vector<EmbeddingResult> embedding_check(const GammaParams& params, const std::vector<EmbeddingCase>& cases,
                                             int cells = 24, int refinement = 4, double tolerance = 0.25);

/// One row per report: tau, aggregates, then every entry's fields.
void write_norm_csv(std::ostream& out, const std::vector<NormReport>& reports);

}  // namespace affinelab
