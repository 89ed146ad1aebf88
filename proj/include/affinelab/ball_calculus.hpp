// Discrete calculus on the unit ball: cell-centred grids, mask-aware
// difference stencils, the flow-map Jacobian algebra, Lagrangian (Lie)
// operators and a refinement study of the vector-field commutator identities.
#pragma once

#include "affinelab/core.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <type_traits>
#include <vector>

namespace affinelab {

using ScalarField = std::vector<double>;
using VectorField = std::vector<Vec3>;
using MatrixField = std::vector<Mat3>;

/// Cell-centred lattice on [-1, 1]^3 with `cells` cells per side. A node is
/// active when it lies strictly inside the unit ball. Immutable.
class CartesianGrid {
 public:
  CartesianGrid(int cells, const GammaParams& params, double r_min = 1e-3);

  int cells() const { return cells_; }
  double h() const { return h_; }
  double r_min() const { return r_min_; }
  std::size_t size() const { return y_.size(); }
  const GammaParams& params() const { return params_; }

  std::size_t index(int i, int j, int k) const;
  std::array<int, 3> coords(std::size_t n) const;
  const Vec3& node(std::size_t n) const { return y_[n]; }
  double radius(std::size_t n) const { return r_[n]; }
  bool active(std::size_t n) const { return active_[n] != 0; }
  double w(std::size_t n) const { return w_[n]; }
  double psi(std::size_t n) const { return psi_[n]; }
  const ScalarField& w() const { return w_; }
  const ScalarField& psi() const { return psi_; }

  /// Active node `steps` cells away along `axis`, or -1.
  std::ptrdiff_t neighbor(std::size_t n, int axis, int steps) const;

  /// Midpoint rule over active nodes.
  double integrate(const ScalarField& f) const;

  /// Samples `fn(y)` at every active node; inactive nodes hold T{} (zero).
  template <class T, class Fn>
  std::vector<T> sample(Fn&& fn) const {
    std::vector<T> out(size(), zero<T>());
    for (std::size_t n = 0; n < size(); ++n)
      if (active(n)) out[n] = fn(y_[n]);
    return out;
  }

  template <class T>
  static T zero() {
    if constexpr (std::is_arithmetic_v<T>) return T{0};
    else return T::Zero();
  }

 private:
  GammaParams params_;
  int cells_;
  double h_;
  double r_min_;
  std::vector<Vec3> y_;
  ScalarField r_;
  std::vector<unsigned char> active_;
  ScalarField w_;
  ScalarField psi_;
};

/// Cell-centred radial grid on (0, 1): r_i = (i + 1/2) dr.
struct RadialGrid {
  RadialGrid(int cells, const GammaParams& params);

  /// 4 pi sum r_i^2 f_i dr: ball integral of a radial function.
  double integrate(const ScalarField& f) const;

  int cells;
  double dr;
  ScalarField r;
  ScalarField w;
  ScalarField psi;
};

/// Second-order central difference along `axis` on active nodes; one-sided
/// second order where a neighbour is inactive, first order where only one
/// neighbour exists. Inactive nodes yield zero.
template <class T>
std::vector<T> partial(const CartesianGrid& grid, const std::vector<T>& f, int axis);

/// gradient(i, s) = d_s F^i.
MatrixField gradient(const CartesianGrid& grid, const VectorField& F);

/// y_hat . grad f; zero below r_min.
template <class T>
std::vector<T> radial_derivative(const CartesianGrid& grid, const std::vector<T>& f);

/// (d_i - y_hat_i y_hat . grad) f; zero below r_min.
template <class T>
std::vector<T> angular_gradient(const CartesianGrid& grid, const std::vector<T>& f, int i);

/// D eta = Id + D theta with pointwise exact inverse, determinant and
/// cofactor = J * InvJac. Inactive nodes hold the identity.
struct FlowMapDiff {
  MatrixField Deta;
  ScalarField J;
  MatrixField InvJac;
  MatrixField cof;
};

/// Throws NumericalFailure if J <= 0 at an active node.
FlowMapDiff flow_map_jacobian(const CartesianGrid& grid, const VectorField& theta);

/// Lagrangian operators at one point from DF(i, s) = d_s F^i.
struct LiePoint {
  Mat3 grad;   // grad(i, r) = InvJac(s, r) DF(i, s)
  double div = 0.0;
  Vec3 curl;   // curl_i = eps_ijk Lambda_jm InvJac(s, m) DF(k, s)
  Mat3 Curl;   // Curl(i, j) = Lambda_jm InvJac(s, m) DF(i, s) - (i <-> j)
};
LiePoint lie_point(const Mat3& DF, const Mat3& InvJac, const Mat3& Lambda);

struct LieFields {
  MatrixField grad;
  ScalarField div;
  VectorField curl;
  MatrixField Curl;
};
LieFields lie_operators(const CartesianGrid& grid, const VectorField& F, const FlowMapDiff& fmd, const Mat3& Lambda);

/// Commutator identities evaluated by composed pointwise stencils of spacing
/// h at seeded points of an annulus; residual = sup |lhs - rhs|.
struct IdentityResidual {
  std::string name;
  std::vector<double> spacing;
  std::vector<double> residual;
  std::vector<double> order;  // between successive spacings
  double min_order = 0.0;
  bool exact = false;  // residual below exact_tolerance at every spacing
  bool passed = false;
};

struct CommutatorOptions {
  std::vector<double> spacing{0.032, 0.016, 0.008, 0.004};
  int points = 64;
  std::uint64_t seed = 20240611;
  double r_inner = 0.3;
  double r_outer = 0.8;
  double order_floor = 1.85;
  double exact_tolerance = 1e-10;
};

struct CommutatorReport {
  std::vector<IdentityResidual> identities;
  bool passed = false;
};

CommutatorReport commutator_suite(const GammaParams& params, const CommutatorOptions& options = {});

}  // namespace affinelab
