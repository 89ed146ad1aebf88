#include "affinelab/ball_calculus.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace affinelab {

CartesianGrid::CartesianGrid(int cells, const GammaParams& params, double r_min)
    : params_(params), cells_(cells), h_(2.0 / cells), r_min_(r_min) {
  if (cells < 4) throw ConfigError("cartesian grid needs at least 4 cells per side, got " + std::to_string(cells));
  if (!(r_min > 0.0 && r_min < 0.5)) throw ConfigError("r_min must lie in (0, 0.5)");
  const std::size_t total = static_cast<std::size_t>(cells) * cells * cells;
  y_.resize(total);
  r_.resize(total);
  active_.resize(total);
  w_.resize(total);
  psi_.resize(total);
  for (int i = 0; i < cells; ++i)
    for (int j = 0; j < cells; ++j)
      for (int k = 0; k < cells; ++k) {
        const std::size_t n = index(i, j, k);
        y_[n] = Vec3(-1.0 + (i + 0.5) * h_, -1.0 + (j + 0.5) * h_, -1.0 + (k + 0.5) * h_);
        r_[n] = y_[n].norm();
        active_[n] = r_[n] < 1.0 ? 1 : 0;
        w_[n] = enthalpy_weight(params, r_[n] * r_[n]);
        psi_[n] = cutoff(r_[n]);
      }
}

std::size_t CartesianGrid::index(int i, int j, int k) const {
  return (static_cast<std::size_t>(i) * cells_ + j) * cells_ + k;
}

std::array<int, 3> CartesianGrid::coords(std::size_t n) const {
  const int k = static_cast<int>(n % cells_);
  const int j = static_cast<int>((n / cells_) % cells_);
  const int i = static_cast<int>(n / (static_cast<std::size_t>(cells_) * cells_));
  return {i, j, k};
}

std::ptrdiff_t CartesianGrid::neighbor(std::size_t n, int axis, int steps) const {
  std::array<int, 3> c = coords(n);
  c[axis] += steps;
  if (c[axis] < 0 || c[axis] >= cells_) return -1;
  const std::size_t m = index(c[0], c[1], c[2]);
  return active(m) ? static_cast<std::ptrdiff_t>(m) : -1;
}

double CartesianGrid::integrate(const ScalarField& f) const {
  double sum = 0.0;
  for (std::size_t n = 0; n < size(); ++n)
    if (active(n)) sum += f[n];
  return sum * h_ * h_ * h_;
}

RadialGrid::RadialGrid(int n, const GammaParams& params) : cells(n), dr(1.0 / n) {
  if (n < 2) throw ConfigError("radial grid needs at least 2 cells, got " + std::to_string(n));
  r.resize(n);
  w.resize(n);
  psi.resize(n);
  for (int i = 0; i < n; ++i) {
    r[i] = (i + 0.5) * dr;
    w[i] = enthalpy_weight(params, r[i] * r[i]);
    psi[i] = cutoff(r[i]);
  }
}

double RadialGrid::integrate(const ScalarField& f) const {
  double sum = 0.0;
  for (int i = 0; i < cells; ++i) sum += r[i] * r[i] * f[i];
  return 4.0 * std::numbers::pi * sum * dr;
}

template <class T>
std::vector<T> partial(const CartesianGrid& grid, const std::vector<T>& f, int axis) {
  std::vector<T> out(grid.size(), CartesianGrid::zero<T>());
  const double h = grid.h();
  for (std::size_t n = 0; n < grid.size(); ++n) {
    if (!grid.active(n)) continue;
    const std::ptrdiff_t p = grid.neighbor(n, axis, 1);
    const std::ptrdiff_t m = grid.neighbor(n, axis, -1);
    if (p >= 0 && m >= 0) {
      out[n] = (f[p] - f[m]) / (2.0 * h);
    } else if (p >= 0) {
      const std::ptrdiff_t p2 = grid.neighbor(n, axis, 2);
      out[n] = p2 >= 0 ? T((-3.0 * f[n] + 4.0 * f[p] - f[p2]) / (2.0 * h)) : T((f[p] - f[n]) / h);
    } else if (m >= 0) {
      const std::ptrdiff_t m2 = grid.neighbor(n, axis, -2);
      out[n] = m2 >= 0 ? T((3.0 * f[n] - 4.0 * f[m] + f[m2]) / (2.0 * h)) : T((f[n] - f[m]) / h);
    }
  }
  return out;
}

MatrixField gradient(const CartesianGrid& grid, const VectorField& F) {
  MatrixField out(grid.size(), Mat3::Zero());
  for (int s = 0; s < 3; ++s) {
    const VectorField ds = partial(grid, F, s);
    for (std::size_t n = 0; n < grid.size(); ++n) out[n].col(s) = ds[n];
  }
  return out;
}

template <class T>
std::vector<T> radial_derivative(const CartesianGrid& grid, const std::vector<T>& f) {
  std::vector<T> out(grid.size(), CartesianGrid::zero<T>());
  for (int i = 0; i < 3; ++i) {
    const std::vector<T> di = partial(grid, f, i);
    for (std::size_t n = 0; n < grid.size(); ++n)
      if (grid.active(n) && grid.radius(n) >= grid.r_min())
        out[n] += (grid.node(n)(i) / grid.radius(n)) * di[n];
  }
  return out;
}

template <class T>
std::vector<T> angular_gradient(const CartesianGrid& grid, const std::vector<T>& f, int i) {
  std::vector<T> out = partial(grid, f, i);
  const std::vector<T> dr = radial_derivative(grid, f);
  for (std::size_t n = 0; n < grid.size(); ++n) {
    if (!grid.active(n) || grid.radius(n) < grid.r_min()) {
      out[n] = CartesianGrid::zero<T>();
      continue;
    }
    out[n] -= (grid.node(n)(i) / grid.radius(n)) * dr[n];
  }
  return out;
}

template ScalarField partial(const CartesianGrid&, const ScalarField&, int);
template VectorField partial(const CartesianGrid&, const VectorField&, int);
template MatrixField partial(const CartesianGrid&, const MatrixField&, int);
template ScalarField radial_derivative(const CartesianGrid&, const ScalarField&);
template VectorField radial_derivative(const CartesianGrid&, const VectorField&);
template MatrixField radial_derivative(const CartesianGrid&, const MatrixField&);
template ScalarField angular_gradient(const CartesianGrid&, const ScalarField&, int);
template VectorField angular_gradient(const CartesianGrid&, const VectorField&, int);
template MatrixField angular_gradient(const CartesianGrid&, const MatrixField&, int);

FlowMapDiff flow_map_jacobian(const CartesianGrid& grid, const VectorField& theta) {
  FlowMapDiff out;
  out.Deta = gradient(grid, theta);
  out.J.assign(grid.size(), 1.0);
  out.InvJac.assign(grid.size(), Mat3::Identity());
  out.cof.assign(grid.size(), Mat3::Identity());
  for (std::size_t n = 0; n < grid.size(); ++n) {
    if (!grid.active(n)) {
      out.Deta[n] = Mat3::Identity();
      continue;
    }
    out.Deta[n] += Mat3::Identity();
    const double J = out.Deta[n].determinant();
    if (!(J > 0.0)) {
      std::ostringstream msg;
      msg << "flow map degenerates: J = " << J << " at y = (" << grid.node(n).transpose() << ")";
      throw NumericalFailure(msg.str());
    }
    out.J[n] = J;
    out.InvJac[n] = out.Deta[n].inverse();
    out.cof[n] = J * out.InvJac[n];
  }
  return out;
}

LiePoint lie_point(const Mat3& DF, const Mat3& InvJac, const Mat3& Lambda) {
  LiePoint p;
  p.grad = DF * InvJac;
  p.div = p.grad.trace();
  const Mat3 X = p.grad * Lambda;
  p.Curl = X - X.transpose();
  p.curl = Vec3(X(2, 1) - X(1, 2), X(0, 2) - X(2, 0), X(1, 0) - X(0, 1));
  return p;
}

LieFields lie_operators(const CartesianGrid& grid, const VectorField& F, const FlowMapDiff& fmd, const Mat3& Lambda) {
  const MatrixField DF = gradient(grid, F);
  LieFields out;
  out.grad.assign(grid.size(), Mat3::Zero());
  out.div.assign(grid.size(), 0.0);
  out.curl.assign(grid.size(), Vec3::Zero());
  out.Curl.assign(grid.size(), Mat3::Zero());
  for (std::size_t n = 0; n < grid.size(); ++n) {
    if (!grid.active(n)) continue;
    const LiePoint p = lie_point(DF[n], fmd.InvJac[n], Lambda);
    out.grad[n] = p.grad;
    out.div[n] = p.div;
    out.curl[n] = p.curl;
    out.Curl[n] = p.Curl;
  }
  return out;
}

namespace {

// Lazily composed central differences of spacing h acting on callables
// y -> double | Vec3 | Mat3.
struct Stencil {
  double h;

  template <class F>
  auto d(int i, F f) const {
    return [f, i, h = h](const Vec3& y) {
      const Vec3 e = h * Vec3::Unit(i);
      using R = std::decay_t<decltype(f(y))>;
      return R((f(y + e) - f(y - e)) / (2.0 * h));
    };
  }

  template <class F>
  auto dr(F f) const {
    return [f, s = *this](const Vec3& y) {
      const Vec3 n = y / y.norm();
      using R = std::decay_t<decltype(f(y))>;
      R acc = R(n(0) * s.d(0, f)(y));
      acc += n(1) * s.d(1, f)(y);
      acc += n(2) * s.d(2, f)(y);
      return acc;
    };
  }

  template <class F>
  auto ang(int i, F f) const {
    return [f, i, s = *this](const Vec3& y) {
      using R = std::decay_t<decltype(f(y))>;
      return R(s.d(i, f)(y) - (y(i) / y.norm()) * s.dr(f)(y));
    };
  }
};

double max_abs(const Vec3& v) { return v.cwiseAbs().maxCoeff(); }
double max_abs(const Mat3& m) { return m.cwiseAbs().maxCoeff(); }

// Delta_ij = (y_i y_j - delta_ij r^2) / r^3.
double delta_coef(const Vec3& y, int i, int j) {
  const double r = y.norm();
  return (y(i) * y(j) - (i == j ? r * r : 0.0)) / (r * r * r);
}

double field_a(const Vec3& y) { return y(0) * y(1) * y(1); }
double field_b(const Vec3& y) {
  return y(0) * y(0) * y(0) * y(2) + y(1) * y(1) * y(1) * y(1) - 0.7 * y(0) * y(1) * y(2) + 0.3 * y(2) * y(2);
}

Mat3 tensor_field(const Vec3& y) {
  Mat3 T;
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      T(k, i) = y(k) * y(i) * y(i) + 0.5 * std::pow(y((k + i) % 3), 3) + (k == i ? y(0) * y(1) * y(2) : 0.0) +
                0.2 * (k + 1) * y(i);
  return T;
}

Vec3 displacement_field(const Vec3& y) {
  return 0.1 * Vec3(y(1) * y(2) * y(2) + y(0) * y(0), y(0) * y(0) * y(2) - y(1) * y(1) * y(1),
                    y(0) * y(1) * y(2) + y(0) * y(0) * y(0));
}

using Residual = std::function<double(const Stencil&, const Vec3&)>;

struct NamedIdentity {
  std::string name;
  Residual residual;
};

std::vector<NamedIdentity> scalar_identities() {
  std::vector<NamedIdentity> out;
  const auto over_fields = [](auto per_field) {
    return [per_field](const Stencil& s, const Vec3& y) {
      return std::max(per_field(s, y, field_a), per_field(s, y, field_b));
    };
  };

  out.push_back({"cartesian derivatives commute", over_fields([](const Stencil& s, const Vec3& y, auto f) {
                   double worst = 0.0;
                   for (int i = 0; i < 3; ++i)
                     for (int j = 0; j < 3; ++j)
                       worst = std::max(worst, std::abs(s.d(i, s.d(j, f))(y) - s.d(j, s.d(i, f))(y)));
                   return worst;
                 })});

  out.push_back({"[d_r, d_i] = -(1/r) ang_i", over_fields([](const Stencil& s, const Vec3& y, auto f) {
                   const double r = y.norm();
                   double worst = 0.0;
                   for (int i = 0; i < 3; ++i) {
                     const double lhs = s.dr(s.d(i, f))(y) - s.d(i, s.dr(f))(y);
                     worst = std::max(worst, std::abs(lhs + s.ang(i, f)(y) / r));
                   }
                   return worst;
                 })});

  out.push_back({"[d_r, ang_i] = -(1/r) ang_i", over_fields([](const Stencil& s, const Vec3& y, auto f) {
                   const double r = y.norm();
                   double worst = 0.0;
                   for (int i = 0; i < 3; ++i) {
                     const double lhs = s.dr(s.ang(i, f))(y) - s.ang(i, s.dr(f))(y);
                     worst = std::max(worst, std::abs(lhs + s.ang(i, f)(y) / r));
                   }
                   return worst;
                 })});

  out.push_back({"[ang_i, ang_j] = (y_i ang_j - y_j ang_i)/r^2",
                 over_fields([](const Stencil& s, const Vec3& y, auto f) {
                   const double r2 = y.squaredNorm();
                   double worst = 0.0;
                   for (int i = 0; i < 3; ++i)
                     for (int j = 0; j < 3; ++j) {
                       const double lhs = s.ang(i, s.ang(j, f))(y) - s.ang(j, s.ang(i, f))(y);
                       const double rhs = (y(i) * s.ang(j, f)(y) - y(j) * s.ang(i, f)(y)) / r2;
                       worst = std::max(worst, std::abs(lhs - rhs));
                     }
                   return worst;
                 })});

  out.push_back({"[d_i, ang_j] = -y_j ang_i/r^2 + Delta_ij d_r",
                 over_fields([](const Stencil& s, const Vec3& y, auto f) {
                   const double r2 = y.squaredNorm();
                   double worst = 0.0;
                   for (int i = 0; i < 3; ++i)
                     for (int j = 0; j < 3; ++j) {
                       const double lhs = s.d(i, s.ang(j, f))(y) - s.ang(j, s.d(i, f))(y);
                       const double rhs = -y(j) * s.ang(i, f)(y) / r2 + delta_coef(y, i, j) * s.dr(f)(y);
                       worst = std::max(worst, std::abs(lhs - rhs));
                     }
                   return worst;
                 })});

  out.push_back({"[d_r ang_l, d_j] second-order expansion", over_fields([](const Stencil& s, const Vec3& y, auto f) {
                   const double r = y.norm();
                   double worst = 0.0;
                   for (int l = 0; l < 3; ++l)
                     for (int j = 0; j < 3; ++j) {
                       const double lhs = s.dr(s.ang(l, s.d(j, f)))(y) - s.d(j, s.dr(s.ang(l, f)))(y);
                       const auto inner = [s, f, l, j](const Vec3& z) {
                         return z(l) * s.ang(j, f)(z) / z.squaredNorm() - delta_coef(z, j, l) * s.dr(f)(z);
                       };
                       const double rhs = s.dr(inner)(y) - s.ang(j, s.ang(l, f))(y) / r;
                       worst = std::max(worst, std::abs(lhs - rhs));
                     }
                   return worst;
                 })});
  return out;
}

std::vector<NamedIdentity> weighted_identities(const GammaParams& params) {
  const double q = params.alpha();
  const double scale = params.enthalpy_scale();
  const auto w = [scale](const Vec3& z) { return scale * (1.0 - z.squaredNorm()); };
  const auto T = [](const Vec3& z) { return tensor_field(z); };
  // Row k of a matrix summed over k: sum_k M(k, i) selects the divergence index.
  const auto trace_rows = [](auto&& per_k) {
    Vec3 acc = Vec3::Zero();
    for (int k = 0; k < 3; ++k) acc += per_k(k);
    return acc;
  };
  std::vector<NamedIdentity> out;

  out.push_back({"Commr (q = alpha)", [=](const Stencil& s, const Vec3& y) {
                   const double r = y.norm();
                   const auto wT = [w, T, q](const Vec3& z) { return Mat3(std::pow(w(z), 1.0 + q) * T(z)); };
                   const auto g = [=](const Vec3& z) {
                     return Vec3(std::pow(w(z), -q) *
                                 trace_rows([&](int k) { return Vec3(s.d(k, wT)(z).row(k).transpose()); }));
                   };
                   const Vec3 lhs = s.dr(g)(y);
                   const auto w2drT = [=](const Vec3& z) { return Mat3(std::pow(w(z), 2.0 + q) * s.dr(T)(z)); };
                   const Mat3 Ty = T(y);
                   const Vec3 rhs =
                       std::pow(w(y), -(1.0 + q)) *
                           trace_rows([&](int k) { return Vec3(s.d(k, w2drT)(y).row(k).transpose()); }) +
                       (s.dr(w)(y) - w(y) / r) *
                           trace_rows([&](int k) { return Vec3(s.ang(k, T)(y).row(k).transpose()); }) +
                       (1.0 + q) * trace_rows([&](int k) { return Vec3(s.dr(s.d(k, w))(y) * Ty.row(k).transpose()); });
                   return max_abs(Vec3(lhs - rhs));
                 }});

  out.push_back({"Commphi (q = alpha)", [=](const Stencil& s, const Vec3& y) {
                   const double r = y.norm();
                   const auto wT = [w, T, q](const Vec3& z) { return Mat3(std::pow(w(z), 1.0 + q) * T(z)); };
                   const auto g = [=](const Vec3& z) {
                     return Vec3(std::pow(w(z), -q) *
                                 trace_rows([&](int k) { return Vec3(s.d(k, wT)(z).row(k).transpose()); }));
                   };
                   const Mat3 Ty = T(y);
                   const Mat3 drT = s.dr(T)(y);
                   double worst = 0.0;
                   for (int j = 0; j < 3; ++j) {
                     const Vec3 lhs = s.ang(j, g)(y);
                     const auto w1angT = [=](const Vec3& z) {
                       return Mat3(std::pow(w(z), 1.0 + q) * s.ang(j, T)(z));
                     };
                     Vec3 rhs = std::pow(w(y), -q) *
                                trace_rows([&](int k) { return Vec3(s.d(k, w1angT)(y).row(k).transpose()); });
                     rhs += w(y) * trace_rows([&](int k) {
                       const double coef = ((k == j ? r * r : 0.0) - y(k) * y(j)) / (r * r * r);
                       return Vec3(y(j) * s.ang(k, T)(y).row(k).transpose() / (r * r) + coef * drT.row(k).transpose());
                     });
                     rhs += (1.0 + q) *
                            trace_rows([&](int k) { return Vec3(s.ang(j, s.d(k, w))(y) * Ty.row(k).transpose()); });
                     worst = std::max(worst, max_abs(Vec3(lhs - rhs)));
                   }
                   return worst;
                 }});
  return out;
}

std::vector<NamedIdentity> inverse_jacobian_identities() {
  const auto theta = [](const Vec3& z) { return displacement_field(z); };
  // Dtheta_h(s, m) = d_m theta^s.
  const auto grad_of = [](const Stencil& s, auto field) {
    return [s, field](const Vec3& z) {
      Mat3 D;
      for (int m = 0; m < 3; ++m) D.col(m) = s.d(m, field)(z);
      return D;
    };
  };
  const auto inv_jac = [=](const Stencil& s) {
    return [=](const Vec3& z) { return Mat3((Mat3::Identity() + grad_of(s, theta)(z)).inverse()); };
  };
  std::vector<NamedIdentity> out;

  out.push_back({"d_l InvJac = -InvJac (d_l D eta) InvJac", [=](const Stencil& s, const Vec3& y) {
                   const Mat3 A = inv_jac(s)(y);
                   double worst = 0.0;
                   for (int l = 0; l < 3; ++l) {
                     const Mat3 lhs = s.d(l, inv_jac(s))(y);
                     const Mat3 H = grad_of(s, s.d(l, theta))(y);
                     worst = std::max(worst, max_abs(Mat3(lhs + A * H * A)));
                   }
                   return worst;
                 }});

  out.push_back({"d_r InvJac top-order formula", [=](const Stencil& s, const Vec3& y) {
                   const double r = y.norm();
                   const Mat3 A = inv_jac(s)(y);
                   const Mat3 lhs = s.dr(inv_jac(s))(y);
                   const Mat3 K = grad_of(s, s.dr(theta))(y);
                   Mat3 C;
                   for (int m = 0; m < 3; ++m) C.col(m) = s.ang(m, theta)(y) / r;
                   return max_abs(Mat3(lhs - (-A * K * A + A * C * A)));
                 }});

  out.push_back({"ang_j InvJac top-order formula", [=](const Stencil& s, const Vec3& y) {
                   const double r2 = y.squaredNorm();
                   const Mat3 A = inv_jac(s)(y);
                   const Vec3 dr_theta = s.dr(theta)(y);
                   double worst = 0.0;
                   for (int j = 0; j < 3; ++j) {
                     const Mat3 lhs = s.ang(j, inv_jac(s))(y);
                     const Mat3 K = grad_of(s, s.ang(j, theta))(y);
                     Mat3 C;
                     for (int m = 0; m < 3; ++m)
                       C.col(m) = -y(j) * s.ang(m, theta)(y) / r2 + delta_coef(y, m, j) * dr_theta;
                     worst = std::max(worst, max_abs(Mat3(lhs - (-A * K * A + A * C * A))));
                   }
                   return worst;
                 }});
  return out;
}

std::vector<Vec3> annulus_points(const CommutatorOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  std::vector<Vec3> pts;
  pts.reserve(opt.points);
  for (int k = 0; k < opt.points; ++k) {
    Vec3 dir(normal(rng), normal(rng), normal(rng));
    dir.normalize();
    pts.push_back((opt.r_inner + (opt.r_outer - opt.r_inner) * unit(rng)) * dir);
  }
  return pts;
}

}  // namespace

CommutatorReport commutator_suite(const GammaParams& params, const CommutatorOptions& options) {
  if (options.spacing.size() < 2) throw ConfigError("commutator suite needs at least two spacings");
  if (!(options.r_inner > 0.0 && options.r_outer < 1.0 && options.r_inner < options.r_outer))
    throw ConfigError("commutator annulus must satisfy 0 < r_inner < r_outer < 1");
  const std::vector<Vec3> pts = annulus_points(options);

  std::vector<NamedIdentity> all = scalar_identities();
  for (auto& id : weighted_identities(params)) all.push_back(std::move(id));
  for (auto& id : inverse_jacobian_identities()) all.push_back(std::move(id));

  CommutatorReport report;
  report.passed = true;
  for (const NamedIdentity& id : all) {
    IdentityResidual res;
    res.name = id.name;
    res.spacing = options.spacing;
    for (double h : options.spacing) {
      const Stencil s{h};
      double worst = 0.0;
      for (const Vec3& y : pts) worst = std::max(worst, id.residual(s, y));
      res.residual.push_back(worst);
    }
    res.exact = std::all_of(res.residual.begin(), res.residual.end(),
                            [&](double v) { return v <= options.exact_tolerance; });
    res.min_order = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < res.residual.size(); ++k) {
      const double order = std::log(res.residual[k] / res.residual[k + 1]) / std::log(res.spacing[k] / res.spacing[k + 1]);
      res.order.push_back(order);
      res.min_order = std::min(res.min_order, order);
    }
    res.passed = res.exact || res.min_order >= options.order_floor;
    report.passed = report.passed && res.passed;
    report.identities.push_back(std::move(res));
  }
  return report;
}

}  // namespace affinelab
