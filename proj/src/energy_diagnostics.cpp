#include "affinelab/energy_diagnostics.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <tuple>

namespace affinelab {

namespace {

double side_weight(Side side, double psi) {
  switch (side) {
    case Side::Boundary: return psi;
    case Side::Interior: return 1.0 - psi;
    case Side::Whole: return 1.0;
  }
  return 1.0;
}

double squared(double v) { return v * v; }
double squared(const Vec3& v) { return v.squaredNorm(); }
double squared(const Mat3& m) { return m.squaredNorm(); }

template <class T>
double weighted_norm_impl(const CartesianGrid& grid, const std::vector<T>& f, double k, Side side) {
  if (f.size() != grid.size()) throw ConfigError("field does not match the grid size");
  double sum = 0.0;
  for (std::size_t n = 0; n < grid.size(); ++n) {
    if (!grid.active(n)) continue;
    const double phi = side_weight(side, grid.psi(n));
    if (phi == 0.0) continue;
    sum += phi * std::pow(grid.w(n), k) * squared(f[n]);
  }
  const double h = grid.h();
  return sum * h * h * h;
}

// Composite derivatives in the fixed operator ordering.
template <class T>
std::vector<T> boundary_composite(const CartesianGrid& grid, std::vector<T> f, int a, const std::array<int, 3>& beta) {
  for (int axis = 2; axis >= 0; --axis)
    for (int b = 0; b < beta[axis]; ++b) f = angular_gradient(grid, f, axis);
  for (int s = 0; s < a; ++s) f = radial_derivative(grid, f);
  return f;
}

template <class T>
std::vector<T> interior_composite(const CartesianGrid& grid, std::vector<T> f, const std::array<int, 3>& nu) {
  for (int axis = 2; axis >= 0; --axis)
    for (int b = 0; b < nu[axis]; ++b) f = partial(grid, f, axis);
  return f;
}

struct CompositeIndex {
  Side side;
  int a;
  std::array<int, 3> multi;
};

std::vector<std::array<int, 3>> multi_indices(int total) {
  std::vector<std::array<int, 3>> out;
  for (int b1 = total; b1 >= 0; --b1)
    for (int b2 = total - b1; b2 >= 0; --b2) out.push_back({b1, b2, total - b1 - b2});
  return out;
}

std::vector<CompositeIndex> composite_indices(int order) {
  std::vector<CompositeIndex> out;
  for (int t = 0; t <= order; ++t)
    for (int a = t; a >= 0; --a)
      for (const auto& beta : multi_indices(t - a)) out.push_back({Side::Boundary, a, beta});
  for (int t = 0; t <= order; ++t)
    for (const auto& nu : multi_indices(t)) out.push_back({Side::Interior, 0, nu});
  return out;
}

std::string composite_label(const CompositeIndex& c) {
  std::ostringstream s;
  if (c.side == Side::Boundary) s << 'r' << c.a << 'a';
  else s << 'd';
  s << c.multi[0] << c.multi[1] << c.multi[2];
  return s.str();
}

void validate_order(int order) {
  if (order < 0 || order > kMaxOrder)
    throw ConfigError("composite order must lie in [0, " + std::to_string(kMaxOrder) + "], got " +
                      std::to_string(order));
}

// Pointwise data of D_eta: inverse Jacobian and J^(-1/alpha).
struct EtaGeometry {
  MatrixField inv_jac;
  ScalarField j_factor;
};

EtaGeometry eta_geometry(const CartesianGrid& grid, const GammaParams& params, const VectorField& theta,
                         EvalMode mode) {
  EtaGeometry geo;
  if (mode == EvalMode::Linearized) {
    geo.inv_jac.assign(grid.size(), Mat3::Identity());
    geo.j_factor.assign(grid.size(), 1.0);
    return geo;
  }
  FlowMapDiff fmd = flow_map_jacobian(grid, theta);
  geo.inv_jac = std::move(fmd.InvJac);
  geo.j_factor.resize(grid.size());
  for (std::size_t n = 0; n < grid.size(); ++n) geo.j_factor[n] = std::pow(fmd.J[n], -1.0 / params.alpha());
  return geo;
}

NormReport evaluate(const CartesianGrid& grid, const GammaParams& params, const CartesianSnapshot& snap, int order,
                    EvalMode mode) {
  validate_order(order);
  if (snap.theta.size() != grid.size() || snap.V.size() != grid.size())
    throw ConfigError("snapshot does not match the grid size");
  const DerivedFrame& fr = snap.frame;
  const double inertia = fr.inertia(params);
  const double alpha = params.alpha();
  const double delta = params.delta();
  const double prefactor = dissipation_prefactor(params, fr);
  const Mat3 lambda_inv = fr.Lambda.inverse();
  const EtaGeometry geo = eta_geometry(grid, params, snap.theta, mode);
  const double cell = std::pow(grid.h(), 3);

  NormReport rep;
  rep.tau = snap.tau;
  rep.order = order;
  double energy = 0.0;
  double dissipation = 0.0;
  for (const CompositeIndex& c : composite_indices(order)) {
    const VectorField th = c.side == Side::Boundary ? boundary_composite(grid, snap.theta, c.a, c.multi)
                                                    : interior_composite(grid, snap.theta, c.multi);
    const VectorField v = c.side == Side::Boundary ? boundary_composite(grid, snap.V, c.a, c.multi)
                                                   : interior_composite(grid, snap.V, c.multi);
    const MatrixField dth = gradient(grid, th);
    const MatrixField dv = gradient(grid, v);
    const double k = c.a + alpha;

    IndexEntry e;
    e.label = composite_label(c);
    e.side = c.side;
    e.radial = c.a;
    e.multi = c.multi;
    for (std::size_t n = 0; n < grid.size(); ++n) {
      if (!grid.active(n)) continue;
      const double phi = side_weight(c.side, grid.psi(n));
      if (phi == 0.0) continue;
      const double wk = std::pow(grid.w(n), k);
      const double wk1 = wk * grid.w(n);
      const LiePoint lt = lie_point(dth[n], geo.inv_jac[n], fr.Lambda);
      const LiePoint lv = lie_point(dv[n], geo.inv_jac[n], fr.Lambda);
      const double vv = v[n].squaredNorm();
      const double tt = th[n].squaredNorm();
      e.velocity += phi * wk * vv;
      e.displacement += phi * wk * tt;
      e.gradient += phi * wk1 * lt.grad.squaredNorm();
      e.divergence += phi * wk1 * lt.div * lt.div;
      e.curl_velocity += phi * wk1 * lv.Curl.squaredNorm();
      e.curl_displacement += phi * wk1 * lt.Curl.squaredNorm();

      const double v_lambda = v[n].dot(lambda_inv * v[n]);
      const double th_lambda = th[n].dot(lambda_inv * th[n]);
      const double top = anisotropic_square(lt.grad.transpose(), fr.eig) + lt.div * lt.div / alpha;
      energy += phi * (wk * (inertia * v_lambda + delta * th_lambda) + geo.j_factor[n] * wk1 * top);
      dissipation += phi * wk * v_lambda;
    }
    for (double* field : {&e.velocity, &e.displacement, &e.gradient, &e.divergence, &e.curl_velocity,
                          &e.curl_displacement})
      *field *= cell;
    rep.norm += inertia * e.velocity + e.displacement + e.gradient + e.divergence;
    rep.vorticity_velocity += e.curl_velocity;
    rep.vorticity_displacement += e.curl_displacement;
    rep.entries.push_back(std::move(e));
  }
  rep.energy = 0.5 * energy * cell;
  rep.dissipation = prefactor * dissipation * cell;
  return rep;
}

// Slope of a radial profile: odd extension at r = 0, one-sided at r = 1.
ScalarField profile_slope(const RadialGrid& grid, const ScalarField& f) {
  const int n = grid.cells;
  ScalarField out(n);
  for (int i = 0; i < n; ++i) {
    const double left = i == 0 ? -f[0] : f[i - 1];
    out[i] = i + 1 < n ? (f[i + 1] - left) / (2.0 * grid.dr)
                       : (3.0 * f[i] - 4.0 * f[i - 1] + f[i - 2]) / (2.0 * grid.dr);
  }
  return out;
}

double fd4(double m2, double m1, double p1, double p2, double h) { return (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h); }

template <class M>
M fd4(const M& m2, const M& m1, const M& p1, const M& p2, double h) {
  return (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
}

double min_gap(const Vec3& d) { return std::min(d(0) - d(1), d(1) - d(2)); }

// Linearised Lagrangian curl of F from DF(i, s) = d_s F^i with weight L:
// (DF L)(i, j) - (DF L)(j, i).
Mat3 linear_curl(const Mat3& DF, const Mat3& L) {
  const Mat3 x = DF * L;
  return x - x.transpose();
}

double midpoint(const std::function<double(double)>& f, int cells) {
  const double dr = 1.0 / cells;
  double sum = 0.0;
  for (int i = 0; i < cells; ++i) sum += f((i + 0.5) * dr);
  return sum * dr;
}

}  // namespace

double weighted_norm(const CartesianGrid& grid, const ScalarField& f, double k, Side side) {
  return weighted_norm_impl(grid, f, k, side);
}
double weighted_norm(const CartesianGrid& grid, const VectorField& f, double k, Side side) {
  return weighted_norm_impl(grid, f, k, side);
}
double weighted_norm(const CartesianGrid& grid, const MatrixField& f, double k, Side side) {
  return weighted_norm_impl(grid, f, k, side);
}

double weighted_norm(const RadialGrid& grid, const ScalarField& f, double k, Side side) {
  if (f.size() != static_cast<std::size_t>(grid.cells)) throw ConfigError("profile does not match the radial grid");
  double sum = 0.0;
  for (int i = 0; i < grid.cells; ++i)
    sum += grid.r[i] * grid.r[i] * side_weight(side, grid.psi[i]) * std::pow(grid.w[i], k) * f[i] * f[i];
  return 4.0 * std::numbers::pi * sum * grid.dr;
}

double anisotropic_square(const Mat3& M, const SymEigen& eig) {
  const Mat3 mt = eig.P * M * eig.P.transpose();
  double sum = 0.0;
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) sum += eig.d(k) / eig.d(l) * mt(k, l) * mt(k, l);
  return sum;
}

double dissipation_prefactor(const GammaParams& params, const DerivedFrame& frame) {
  double lead = 5.0 - 3.0 * params.gamma();
  if (std::abs(lead) < 1e-12) lead = 0.0;  // monatomic: exactly conservative
  return 0.5 * lead * frame.inertia(params) * frame.mu_rate;
}

NormReport norm_report(const CartesianGrid& grid, const GammaParams& params, const CartesianSnapshot& snap,
                       int order, EvalMode mode) {
  return evaluate(grid, params, snap, order, mode);
}

double s_norm(const CartesianGrid& grid, const GammaParams& params, const CartesianSnapshot& snap, int order,
              EvalMode mode) {
  return evaluate(grid, params, snap, order, mode).norm;
}

EnergyPair energy_and_dissipation(const CartesianGrid& grid, const GammaParams& params, const CartesianSnapshot& snap,
                                  int order, EvalMode mode) {
  const NormReport rep = evaluate(grid, params, snap, order, mode);
  return {rep.energy, rep.dissipation};
}

NormReport radial_norm_report(const RadialGrid& grid, const GammaParams& params, const RadialSnapshot& snap) {
  const int n = grid.cells;
  if (snap.theta.size() != static_cast<std::size_t>(n) || snap.V.size() != static_cast<std::size_t>(n))
    throw ConfigError("radial snapshot does not match the grid size");
  const double alpha = params.alpha();
  const double inertia = snap.frame.inertia(params);
  const ScalarField slope = profile_slope(grid, snap.theta);

  IndexEntry e;
  e.label = "r0a000";
  e.side = Side::Whole;
  double top = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = grid.r[i];
    const double R = r + snap.theta[i];
    const double Rr = 1.0 + slope[i];
    if (!(R > 0.0 && Rr > 0.0)) throw NumericalFailure("radial flow map degenerates in norm evaluation");
    const double gr = 1.0 - 1.0 / Rr;
    const double gt = 1.0 - r / R;
    const double grad2 = gr * gr + 2.0 * gt * gt;
    const double div = gr + 2.0 * gt;
    const double J = Rr * (R / r) * (R / r);
    const double shell = r * r * std::pow(grid.w[i], alpha + 1.0);
    e.gradient += shell * grad2;
    e.divergence += shell * div * div;
    top += shell * std::pow(J, -1.0 / alpha) * (grad2 + div * div / alpha);
  }
  const double scale = 4.0 * std::numbers::pi * grid.dr;
  e.gradient *= scale;
  e.divergence *= scale;
  top *= scale;
  e.velocity = weighted_norm(grid, snap.V, alpha, Side::Whole);
  e.displacement = weighted_norm(grid, snap.theta, alpha, Side::Whole);

  NormReport rep;
  rep.tau = snap.tau;
  rep.order = 0;
  rep.norm = inertia * e.velocity + e.displacement + e.gradient + e.divergence;
  rep.energy = 0.5 * (inertia * e.velocity + params.delta() * e.displacement + top);
  rep.dissipation = dissipation_prefactor(params, snap.frame) * e.velocity;
  rep.entries.push_back(std::move(e));
  return rep;
}

namespace {

RunDiagnostics summarise(std::vector<NormReport> reports) {
  RunDiagnostics diag;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  double min_energy = std::numeric_limits<double>::infinity();
  for (const NormReport& r : reports) {
    if (r.norm > 0.0) {
      const double ratio = r.energy / r.norm;
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    if (r.dissipation < 0.0) diag.dissipation_nonnegative = false;
    if (r.energy > 0.0) {
      min_energy = std::min(min_energy, r.energy);
      diag.energy_growth = std::max(diag.energy_growth, r.energy / min_energy);
    }
  }
  if (hi > 0.0) {
    diag.ratio_min = lo;
    diag.ratio_max = hi;
    diag.ratio_spread = hi / lo;
  }
  diag.reports = std::move(reports);
  return diag;
}

}  // namespace

RunDiagnostics diagnose_run(const CartesianGrid& grid, const GammaParams& params,
                            const std::vector<CartesianSnapshot>& series, int order, EvalMode mode) {
  std::vector<NormReport> reports;
  reports.reserve(series.size());
  for (const auto& s : series) reports.push_back(evaluate(grid, params, s, order, mode));
  return summarise(std::move(reports));
}

RunDiagnostics diagnose_run(const RadialGrid& grid, const GammaParams& params,
                            const std::vector<RadialSnapshot>& series) {
  std::vector<NormReport> reports;
  reports.reserve(series.size());
  for (const auto& s : series) reports.push_back(radial_norm_report(grid, params, s));
  return summarise(std::move(reports));
}

MatrixPath random_matrix_path(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto random_matrix = [&] {
    Mat3 m;
    for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = u(rng);
    return m;
  };
  const Mat3 b0 = random_matrix(), b1 = random_matrix(), b2 = random_matrix(), b3 = random_matrix();
  const double omega = 1.0 + u(rng);
  const Vec3 spin(u(rng), u(rng), u(rng));
  const Mat3 basis = Eigen::AngleAxisd(std::numbers::pi * u(rng), Vec3(u(rng), u(rng), u(rng)).normalized())
                         .toRotationMatrix();
  const Vec3 phase(u(rng), u(rng), u(rng));

  MatrixPath path;
  path.M = [=](double t) { return Mat3(b0 + t * b1 + 0.5 * t * t * b2 + std::sin(omega * t) * b3); };
  path.Lambda = [=](double t) {
    // Log-eigenvalues near (0.8, 0, -0.8), gaps >= 0.4, summing to zero.
    Vec3 s(0.8 + 0.2 * std::sin(t + phase(0)), 0.2 * std::sin(1.3 * t + phase(1)),
           -0.8 + 0.2 * std::sin(0.7 * t + phase(2)));
    s.array() -= s.mean();
    const Mat3 R = Eigen::AngleAxisd(t * spin.norm(), spin.normalized()).toRotationMatrix() * basis;
    return Mat3(R * s.array().exp().matrix().asDiagonal() * R.transpose());
  };
  return path;
}

KeyIdentityReport key_identity_check(const MatrixPath& path, double tau_lo, double tau_hi, int samples, double dtau,
                                     double gap_floor) {
  if (samples < 1 || !(tau_hi >= tau_lo) || !(dtau > 0.0)) throw ConfigError("invalid key identity sampling");
  KeyIdentityReport rep;
  rep.samples = samples;
  for (int s = 0; s < samples; ++s) {
    const double tau = samples == 1 ? tau_lo : tau_lo + (tau_hi - tau_lo) * s / (samples - 1);
    const SymEigen centre = sym_eigen_desc(path.Lambda(tau));
    SymEigen eig[5];
    Mat3 M[5];
    double energy[5];
    for (int o = -2; o <= 2; ++o) {
      const double t = tau + o * dtau;
      eig[o + 2] = o == 0 ? centre : match_frame(centre, sym_eigen_desc(path.Lambda(t)));
      if (min_gap(eig[o + 2].d) < gap_floor) {
        std::ostringstream msg;
        msg << "eigenvalue crossing of Lambda near tau = " << t << "; regenerate the path";
        throw NumericalFailure(msg.str());
      }
      M[o + 2] = path.M(t);
      energy[o + 2] = 0.5 * anisotropic_square(M[o + 2], eig[o + 2]);
    }
    const Mat3 L = path.Lambda(tau);
    const Mat3 Mdot = fd4(M[0], M[1], M[3], M[4], dtau);
    const double lhs = (L * M[2] * L.inverse() * Mdot.transpose()).trace();

    const Mat3& P = centre.P;
    const Vec3& d = centre.d;
    const Mat3 Pdot = fd4(eig[0].P, eig[1].P, eig[3].P, eig[4].P, dtau);
    const Vec3 ddot = fd4(eig[0].d, eig[1].d, eig[3].d, eig[4].d, dtau);
    const Mat3 mt = P * M[2] * P.transpose();
    double ratio_term = 0.0;
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l)
        ratio_term += (ddot(k) / d(l) - d(k) * ddot(l) / (d(l) * d(l))) * mt(k, l) * mt(k, l);
    const Mat3 Q = d.asDiagonal();
    const Mat3 Qinv = d.cwiseInverse().asDiagonal();
    const double frame_term =
        (Q * mt * Qinv * (Pdot * P.transpose() * mt.transpose() + mt.transpose() * P * Pdot.transpose())).trace();
    const double rhs = fd4(energy[0], energy[1], energy[3], energy[4], dtau) - 0.5 * ratio_term - frame_term;

    rep.max_residual = std::max(rep.max_residual, std::abs(lhs - rhs));
    rep.max_lhs = std::max(rep.max_lhs, std::abs(lhs));
  }
  return rep;
}

namespace {

// Max relative residual of the curl transport law over snapshots 0, stride, 2 stride, ...
double transport_residuals(const CartesianGrid& grid, const GammaParams& params,
                           const std::vector<CartesianSnapshot>& series, std::size_t stride,
                           std::vector<double>* residual, std::vector<double>* vorticity) {
  const double k = params.alpha() + 1.0;
  const std::size_t nodes = grid.size();
  MatrixField initial(nodes), integral(nodes, Mat3::Zero()), prev_integrand(nodes), integrand(nodes), diff(nodes),
      curl(nodes);
  double worst = 0.0;
  double prev_tau = 0.0;
  for (std::size_t s = 0; s < series.size(); s += stride) {
    const CartesianSnapshot& snap = series[s];
    const DerivedFrame& fr = snap.frame;
    const MatrixField dv = gradient(grid, snap.V);
    for (std::size_t n = 0; n < nodes; ++n) {
      curl[n] = linear_curl(dv[n], fr.Lambda);
      integrand[n] = fr.mu * (linear_curl(dv[n], fr.Lambda_tau) - 2.0 * linear_curl(fr.GammaStar * dv[n], fr.Lambda));
    }
    if (s == 0) {
      for (std::size_t n = 0; n < nodes; ++n) initial[n] = fr.mu * curl[n];
    } else {
      const double dt = snap.tau - prev_tau;
      for (std::size_t n = 0; n < nodes; ++n) integral[n] += 0.5 * dt * (prev_integrand[n] + integrand[n]);
    }
    for (std::size_t n = 0; n < nodes; ++n) diff[n] = curl[n] - (initial[n] + integral[n]) / fr.mu;
    const double lhs = weighted_norm(grid, curl, k, Side::Whole);
    const double err = std::sqrt(weighted_norm(grid, diff, k, Side::Whole));
    const double rel = lhs > 0.0 ? err / std::sqrt(lhs) : err;
    if (residual) residual->push_back(rel);
    if (vorticity) vorticity->push_back(lhs);
    worst = std::max(worst, rel);
    std::swap(prev_integrand, integrand);
    prev_tau = snap.tau;
  }
  return worst;
}

// sup |u| over 1/4 <= r <= 1 sampled on a fixed set: 64 radii times 512
// Fibonacci directions, independent of any grid.
double annulus_sup(const std::function<double(const Vec3&)>& u) {
  constexpr int kRadii = 64;
  constexpr int kDirections = 512;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  double sup = 0.0;
  for (int d = 0; d < kDirections; ++d) {
    const double z = 1.0 - (2.0 * d + 1.0) / kDirections;
    const double rho = std::sqrt(1.0 - z * z);
    const Vec3 dir(rho * std::cos(golden * d), rho * std::sin(golden * d), z);
    for (int i = 0; i < kRadii; ++i) sup = std::max(sup, std::abs(u((0.25 + 0.75 * i / (kRadii - 1)) * dir)));
  }
  return sup;
}

}  // namespace

CurlTransportReport curl_transport_check(const CartesianGrid& grid, const GammaParams& params,
                                         const std::vector<CartesianSnapshot>& series) {
  if (series.size() < 3) throw ConfigError("curl transport check needs at least three snapshots");
  CurlTransportReport rep;
  for (const auto& s : series) rep.tau.push_back(s.tau);
  rep.max_residual = transport_residuals(grid, params, series, 1, &rep.residual, &rep.vorticity);
  rep.max_residual_half_cadence = transport_residuals(grid, params, series, 2, nullptr, nullptr);
  rep.quadrature_dominated = rep.max_residual_half_cadence > 2.0 * rep.max_residual;

  const bool monatomic = std::abs(params.gamma() - 5.0 / 3.0) < 1e-12;
  std::vector<double> fitted = rep.vorticity;
  if (monatomic)
    for (std::size_t i = 0; i < fitted.size(); ++i) fitted[i] /= 1.0 + rep.tau[i] * rep.tau[i];
  if (std::all_of(fitted.begin(), fitted.end(), [](double v) { return v > 0.0; }))
    rep.vorticity_fit = decay_fit(rep.tau, fitted);
  const double mu1 = series.back().frame.mu_rate;
  rep.predicted_rate = -2.0 * 1.5 * (params.gamma() - 1.0) * mu1;
  return rep;
}

std::vector<HardyCase> default_hardy_family() {
  const double pi = std::numbers::pi;
  return {
      {"linear vanishing, k = 0", 0.0, [](double r) { return 1.0 - r; }, [](double) { return -1.0; }},
      {"constant, k = 1", 1.0, [](double) { return 1.0; }, [](double) { return 0.0; }},
      {"quadratic vanishing, k = -1/2", -0.5, [](double r) { return (1.0 - r) * (1.0 - r); },
       [](double r) { return -2.0 * (1.0 - r); }},
      {"sine, k = 1/2", 0.5, [pi](double r) { return std::sin(pi * r); },
       [pi](double r) { return pi * std::cos(pi * r); }},
      {"exponential, k = 2", 2.0, [](double r) { return std::exp(r); }, [](double r) { return std::exp(r); }},
      {"trace subtracted, k = -3/2", -1.5, [](double r) { return 2.0 - r; }, [](double) { return -1.0; }},
  };
}

std::vector<HardyResult> hardy_check(const std::vector<HardyCase>& cases, int cells, double tolerance) {
  if (cells < 4) throw ConfigError("Hardy check needs at least 4 cells");
  boost::math::quadrature::tanh_sinh<double> integrator;
  std::vector<HardyResult> out;
  for (const HardyCase& c : cases) {
    if (std::abs(c.k + 1.0) < 1e-12) throw ConfigError("Hardy inequality is not stated for k = -1");
    const bool trace = c.k < -1.0;
    const double g1 = trace ? c.g(1.0) : 0.0;
    const std::function<double(double)> lhs_f = [&](double r) {
      const double v = c.g(r) - g1;
      return std::pow(1.0 - r, c.k) * v * v;
    };
    const std::function<double(double)> rhs_f = [&](double r) {
      const double dg = c.dg(r);
      return std::pow(1.0 - r, c.k + 2.0) * (dg * dg + (trace ? 0.0 : c.g(r) * c.g(r)));
    };
    HardyResult res;
    res.name = c.name;
    res.k = c.k;
    res.lhs = integrator.integrate(lhs_f, 0.0, 1.0);
    res.rhs = integrator.integrate(rhs_f, 0.0, 1.0);
    res.constant = res.lhs / res.rhs;
    res.constant_coarse = midpoint(lhs_f, cells) / midpoint(rhs_f, cells);
    res.constant_fine = midpoint(lhs_f, 4 * cells) / midpoint(rhs_f, 4 * cells);
    res.finite = std::isfinite(res.constant) && std::isfinite(res.constant_fine) && res.rhs > 0.0;
    res.stable = res.finite && std::abs(res.constant_fine / res.constant_coarse - 1.0) <= tolerance &&
                 std::abs(res.constant_fine / res.constant - 1.0) <= tolerance;
    out.push_back(std::move(res));
  }
  return out;
}

std::vector<EmbeddingCase> default_embedding_family() {
  return {
      {"constant, k = 0", [](const Vec3&) { return 1.0; }, 0.0},
      {"quadratic, k = 1/2", [](const Vec3& y) { return y(0) * y(0) + y(1) * y(2) + 0.5; }, 0.5},
      {"exponential-trigonometric, k = -1/2",
       [](const Vec3& y) { return std::exp(y(0)) * std::cos(2.0 * y(1)); }, -0.5},
      {"boundary-concentrated, k = 0", [](const Vec3& y) { return std::pow(y.squaredNorm(), 3) + 0.1 * y(2); }, 0.0},
  };
}

std::vector<EmbeddingResult> embedding_check(const GammaParams& params, const std::vector<EmbeddingCase>& cases,
                                             int cells, int refinement, double tolerance) {
  if (cells < 8 || refinement < 2) throw ConfigError("embedding check needs cells >= 8 and refinement >= 2");
  const double alpha = params.alpha();
  const auto constants = [&](const CartesianGrid& grid, const EmbeddingCase& c) {
    if (!(c.k > -1.0)) throw ConfigError("embedding check covers k > -1 only");
    const ScalarField u = grid.sample<double>(c.u);
    // Hardy: iterate d_r up to ceil(alpha - k) times.
    const int m = static_cast<int>(std::ceil(alpha - c.k));
    double rhs = 0.0;
    ScalarField dr = u;
    for (int j = 0; j <= m; ++j) {
      rhs += weighted_norm(grid, dr, alpha + j, Side::Boundary);
      dr = radial_derivative(grid, dr);
    }
    const double hardy = weighted_norm(grid, u, c.k, Side::Boundary) / rhs;

    const double sup = annulus_sup(c.u);
    double norms = 0.0;
    for (const CompositeIndex& ci : composite_indices(kMaxOrder)) {
      const ScalarField f = ci.side == Side::Boundary ? boundary_composite(grid, u, ci.a, ci.multi)
                                                      : interior_composite(grid, u, ci.multi);
      norms += std::sqrt(weighted_norm(grid, f, ci.a + alpha, ci.side));
    }
    return std::pair{hardy, sup / norms};
  };

  std::vector<EmbeddingResult> out;
  const CartesianGrid coarse(cells, params);
  const CartesianGrid fine(cells * refinement, params);
  for (const EmbeddingCase& c : cases) {
    EmbeddingResult res;
    res.name = c.name;
    std::tie(res.hardy_coarse, res.embedding_coarse) = constants(coarse, c);
    std::tie(res.hardy_fine, res.embedding_fine) = constants(fine, c);
    res.finite = std::isfinite(res.hardy_fine) && std::isfinite(res.embedding_fine) && res.hardy_fine > 0.0 &&
                 res.embedding_fine > 0.0;
    res.stable = res.finite && std::abs(res.hardy_fine / res.hardy_coarse - 1.0) <= tolerance &&
                 std::abs(res.embedding_fine / res.embedding_coarse - 1.0) <= tolerance;
    out.push_back(std::move(res));
  }
  return out;
}

void write_norm_csv(std::ostream& out, const std::vector<NormReport>& reports) {
  out << "tau,order,norm,vorticity_velocity,vorticity_displacement,energy,dissipation";
  if (!reports.empty())
    for (const IndexEntry& e : reports.front().entries)
      for (const char* f : {"velocity", "displacement", "gradient", "divergence", "curl_velocity", "curl_displacement"})
        out << ',' << e.label << '_' << f;
  out << '\n';
  out.precision(12);
  for (const NormReport& r : reports) {
    out << r.tau << ',' << r.order << ',' << r.norm << ',' << r.vorticity_velocity << ',' << r.vorticity_displacement
        << ',' << r.energy << ',' << r.dissipation;
    for (const IndexEntry& e : r.entries)
      out << ',' << e.velocity << ',' << e.displacement << ',' << e.gradient << ',' << e.divergence << ','
          << e.curl_velocity << ',' << e.curl_displacement;
    out << '\n';
  }
}

}  // namespace affinelab
