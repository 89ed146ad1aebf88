// Shared value types, exceptions and small 3x3 helpers.
#pragma once

#include <Eigen/Dense>

#include <array>
#include <stdexcept>
#include <string>

namespace affinelab {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

/// Invalid user input (configuration, preconditions on data).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Degenerate flow map, blow-up, non-finite state.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Adiabatic exponent and pressure strength. Construct through make().
class GammaParams {
 public:
  static GammaParams make(double gamma, double delta);

  double gamma() const { return gamma_; }
  double delta() const { return delta_; }
  double alpha() const { return alpha_; }

  /// Prefactor of the equilibrium enthalpy, w(y) = scale * (1 - |y|^2).
  double enthalpy_scale() const { return delta_ / (2.0 * (1.0 + alpha_)); }

 private:
  GammaParams(double gamma, double delta, double alpha)
      : gamma_(gamma), delta_(delta), alpha_(alpha) {}

  double gamma_;
  double delta_;
  double alpha_;
};

/// Enthalpy weight at |y|^2 = r2, clipped to zero outside the unit ball.
double enthalpy_weight(const GammaParams& params, double r2);

/// Quintic smoothstep cutoff: 0 on r <= 1/4, 1 on r >= 3/4, C^2 in between.
double cutoff(double r);

double hs_norm(const Mat3& m);
Mat3 from_row_major(const std::array<double, 9>& v);
std::array<double, 9> to_row_major(const Mat3& m);

/// Symmetric eigen-decomposition M = P^T diag(d) P with rows of P the
/// eigenvectors, d descending, first nonzero entry of every row positive.
struct SymEigen {
  Mat3 P;
  Vec3 d;
};
SymEigen sym_eigen_desc(const Mat3& sym);

/// Permutes and flips rows of `next` to maximise overlap with `reference`.
SymEigen match_frame(const SymEigen& reference, const SymEigen& next);

}  // namespace affinelab
