// Explicit affine solutions of the vacuum Euler system, the GL+(3) change of
// variables, and grid residuals of the (generalized) Euler equations.
#pragma once

#include "affinelab/affine_dynamics.hpp"

#include <functional>
#include <memory>
#include <ostream>
#include <vector>

namespace affinelab {

struct EulerianSample {
  Vec3 x = Vec3::Zero();
  double rho = 0.0;
  Vec3 u = Vec3::Zero();
  bool in_support = false;
};

/// det(A)^-1 w(A^-1 x)^alpha, zero outside the ellipsoid A(B_1).
double affine_density(const Mat3& A, const GammaParams& params, const Vec3& x);

/// A_dot A^-1 x.
Vec3 affine_velocity(const Mat3& A, const Mat3& A_dot, const Vec3& x);

/// (time, position) -> sample. Pure; safe to call concurrently.
using FieldSampler = std::function<EulerianSample(double, const Vec3&)>;

FieldSampler affine_sampler(std::shared_ptr<const AffineTrajectory> trajectory);

/// Residual points: nodes of a cube lattice with `cells` cells per side
/// covering the interior ellipsoid |support_map^-1 x| <= interior_radius,
/// restricted to that ellipsoid.
struct ResidualDomain {
  Mat3 support_map = Mat3::Identity();
  double interior_radius = 0.7;
  int cells = 32;
};

struct ResidualReport {
  double h = 0.0;
  double dt = 0.0;
  int points = 0;
  double continuity_l2 = 0.0;
  double continuity_sup = 0.0;
  double momentum_l2 = 0.0;
  double momentum_sup = 0.0;
};

/// Central-difference residuals of rho_t + div(rho u) and
/// rho (u_t + u.grad u) + Lambda grad(rho^gamma). Lambda = Id is the
/// physical system. Throws ConfigError if the interior subdomain comes
/// within 2h of the vacuum boundary.
ResidualReport euler_residual(const FieldSampler& field, const GammaParams& params, const Mat3& Lambda,
                              const ResidualDomain& domain, double t, double dt_over_h = 1.0);

struct ResidualConvergence {
  ResidualReport coarse;
  ResidualReport fine;
  double continuity_order = 0.0;
  double momentum_order = 0.0;
};

/// Residuals on `domain` and on the same domain with twice the cells;
/// orders are log2 of the L2 ratios.
ResidualConvergence residual_convergence(const FieldSampler& field, const GammaParams& params, const Mat3& Lambda,
                                         const ResidualDomain& domain, double t);

/// rho~(s, y) = det(B) rho(s/k, B y), u~(s, y) = k^-1 B^-1 u(s/k, B y) with
/// k = det(B)^((1 - 3 gamma)/6); solves the generalized system with Lambda(B).
struct TransformedField {
  FieldSampler sampler;
  Mat3 Lambda;
  double time_dilation = 1.0;  // k: s = k t
};

TransformedField gl3_transform(FieldSampler field, const GammaParams& params, const Mat3& B);

/// Mass of the affine density in physical space by Gauss-Legendre
/// quadrature in spherical coordinates, radial extent clipped at the
/// ellipsoid boundary.
double affine_mass(const Mat3& A, const GammaParams& params);

struct SupportReport {
  double radius_slope = 0.0;  // fitted d(sigma_max A)/dt over the final half of t
  double radius_fit_r2 = 0.0;
  double final_radius = 0.0;
  double cs2_normal_min = 0.0;  // extreme one-sided normal derivatives of gamma rho^(gamma-1)
  double cs2_normal_max = 0.0;
  bool linear_growth = false;
  bool physical_vacuum = false;
};

/// Support growth along the trajectory and the physical vacuum condition at
/// time `t_probe`.
SupportReport support_and_vacuum_checks(const AffineTrajectory& trajectory, double t_probe);

/// One-sided second-order derivative of gamma rho^(gamma-1) along the outward
/// normal at the boundary point A y_hat.
double sound_speed_normal_derivative(const Mat3& A, const GammaParams& params, const Vec3& y_hat);

/// Field dump with columns t,x,y,z,rho,ux,uy,uz,in_support.
void write_field_csv(std::ostream& out, const FieldSampler& field, double t, const std::vector<Vec3>& points);

}  // namespace affinelab
