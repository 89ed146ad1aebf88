#include "affinelab/eulerian_fields.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

namespace affinelab {

double affine_density(const Mat3& A, const GammaParams& params, const Vec3& x) {
  const double det = A.determinant();
  const Vec3 y = A.partialPivLu().solve(x);
  const double w = enthalpy_weight(params, y.squaredNorm());
  return w > 0.0 ? std::pow(w, params.alpha()) / det : 0.0;
}

Vec3 affine_velocity(const Mat3& A, const Mat3& A_dot, const Vec3& x) {
  return A_dot * A.partialPivLu().solve(x);
}

FieldSampler affine_sampler(std::shared_ptr<const AffineTrajectory> trajectory) {
  return [traj = std::move(trajectory)](double t, const Vec3& x) {
    const AffineState st = traj->at_time(t);
    EulerianSample out;
    out.x = x;
    out.in_support = st.A.partialPivLu().solve(x).squaredNorm() < 1.0;
    out.rho = affine_density(st.A, traj->params(), x);
    out.u = affine_velocity(st.A, st.A_dot, x);
    return out;
  };
}

namespace {

Vec3 singular_values(const Mat3& m) { return Eigen::JacobiSVD<Mat3>(m).singularValues(); }

std::vector<Vec3> residual_points(const ResidualDomain& domain, double& h) {
  const Vec3 sv = singular_values(domain.support_map);
  const double L = domain.interior_radius * sv(0);
  h = 2.0 * L / domain.cells;
  if ((1.0 - domain.interior_radius) * sv(2) < 2.0 * h) {
    std::ostringstream msg;
    msg << "interior subdomain (radius " << domain.interior_radius << ") lies within 2h = " << 2.0 * h
        << " of the vacuum boundary; reduce the radius or refine the grid";
    throw ConfigError(msg.str());
  }
  const auto lu = domain.support_map.partialPivLu();
  std::vector<Vec3> pts;
  for (int i = 0; i <= domain.cells; ++i)
    for (int j = 0; j <= domain.cells; ++j)
      for (int k = 0; k <= domain.cells; ++k) {
        const Vec3 x(-L + i * h, -L + j * h, -L + k * h);
        if (lu.solve(x).norm() <= domain.interior_radius) pts.push_back(x);
      }
  return pts;
}

}  // namespace

ResidualReport euler_residual(const FieldSampler& field, const GammaParams& params, const Mat3& Lambda,
                              const ResidualDomain& domain, double t, double dt_over_h) {
  if (domain.cells < 2) throw ConfigError("residual grid needs at least 2 cells per side");
  ResidualReport rep;
  const std::vector<Vec3> pts = residual_points(domain, rep.h);
  const double h = rep.h;
  const double dt = dt_over_h * h;
  rep.dt = dt;
  rep.points = static_cast<int>(pts.size());
  const double g = params.gamma();

  double c2 = 0.0, m2 = 0.0;
  for (const Vec3& x : pts) {
    const EulerianSample c = field(t, x);
    const EulerianSample fwd = field(t + dt, x);
    const EulerianSample bwd = field(t - dt, x);
    const double rho_t = (fwd.rho - bwd.rho) / (2.0 * dt);
    const Vec3 u_t = (fwd.u - bwd.u) / (2.0 * dt);

    double div_flux = 0.0;
    Mat3 grad_u;  // grad_u(i, j) = d u_i / d x_j
    Vec3 grad_p;
    for (int j = 0; j < 3; ++j) {
      const Vec3 e = h * Vec3::Unit(j);
      const EulerianSample p = field(t, x + e);
      const EulerianSample m = field(t, x - e);
      div_flux += (p.rho * p.u(j) - m.rho * m.u(j)) / (2.0 * h);
      grad_u.col(j) = (p.u - m.u) / (2.0 * h);
      grad_p(j) = (std::pow(p.rho, g) - std::pow(m.rho, g)) / (2.0 * h);
    }
    const double rc = rho_t + div_flux;
    const Vec3 rm = c.rho * (u_t + grad_u * c.u) + Lambda * grad_p;
    c2 += rc * rc;
    m2 += rm.squaredNorm();
    rep.continuity_sup = std::max(rep.continuity_sup, std::abs(rc));
    rep.momentum_sup = std::max(rep.momentum_sup, rm.norm());
  }
  const double cell = h * h * h;
  rep.continuity_l2 = std::sqrt(c2 * cell);
  rep.momentum_l2 = std::sqrt(m2 * cell);
  return rep;
}

ResidualConvergence residual_convergence(const FieldSampler& field, const GammaParams& params, const Mat3& Lambda,
                                         const ResidualDomain& domain, double t) {
  ResidualConvergence out;
  out.coarse = euler_residual(field, params, Lambda, domain, t);
  ResidualDomain fine = domain;
  fine.cells *= 2;
  out.fine = euler_residual(field, params, Lambda, fine, t);
  out.continuity_order = std::log2(out.coarse.continuity_l2 / out.fine.continuity_l2);
  out.momentum_order = std::log2(out.coarse.momentum_l2 / out.fine.momentum_l2);
  return out;
}

TransformedField gl3_transform(FieldSampler field, const GammaParams& params, const Mat3& B) {
  const double det = B.determinant();
  if (!(det > 0.0)) throw ConfigError("GL+(3) transformation needs det B > 0");
  TransformedField out;
  out.time_dilation = std::pow(det, (1.0 - 3.0 * params.gamma()) / 6.0);
  out.Lambda = std::pow(det, 2.0 / 3.0) * (B.transpose() * B).inverse();
  const double k = out.time_dilation;
  const Mat3 Binv = B.inverse();
  out.sampler = [field = std::move(field), B, Binv, det, k](double s, const Vec3& y) {
    const EulerianSample src = field(s / k, B * y);
    EulerianSample out_sample;
    out_sample.x = y;
    out_sample.rho = det * src.rho;
    out_sample.u = Binv * src.u / k;
    out_sample.in_support = src.in_support;
    return out_sample;
  };
  return out;
}

double affine_mass(const Mat3& A, const GammaParams& params) {
  using boost::math::quadrature::gauss;
  const Mat3 Ainv = A.inverse();
  const double pi = std::numbers::pi;
  constexpr int kAzimuth = 96;
  double total = 0.0;
  for (int ip = 0; ip < kAzimuth; ++ip) {
    const double phi = 2.0 * pi * (ip + 0.5) / kAzimuth;
    const auto over_polar = [&](double c) {
      const double sn = std::sqrt(std::max(0.0, 1.0 - c * c));
      const Vec3 dir(sn * std::cos(phi), sn * std::sin(phi), c);
      const double reach = 1.0 / (Ainv * dir).norm();
      const auto radial = [&](double s) { return affine_density(A, params, s * dir) * s * s; };
      return gauss<double, 64>::integrate(radial, 0.0, reach);
    };
    total += gauss<double, 48>::integrate(over_polar, -1.0, 1.0);
  }
  return total * 2.0 * pi / kAzimuth;
}

double sound_speed_normal_derivative(const Mat3& A, const GammaParams& params, const Vec3& y_hat) {
  const Vec3 xb = A * y_hat.normalized();
  const Vec3 n = (A.inverse().transpose() * y_hat).normalized();
  const double eps = 1e-4 * singular_values(A)(2);
  const double g = params.gamma();
  const auto cs2 = [&](double depth) { return g * std::pow(affine_density(A, params, xb - depth * n), g - 1.0); };
  const double inward = (-3.0 * cs2(0.0) + 4.0 * cs2(eps) - cs2(2.0 * eps)) / (2.0 * eps);
  return -inward;
}

SupportReport support_and_vacuum_checks(const AffineTrajectory& trajectory, double t_probe) {
  SupportReport rep;
  const double t_end = trajectory.t_final();
  constexpr int kSamples = 200;
  double n = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (int k = 0; k <= kSamples; ++k) {
    const double t = t_end * (0.5 + 0.5 * k / kSamples);
    const double r = singular_values(trajectory.at_time(t).A)(0);
    n += 1.0;
    sx += t;
    sy += r;
    sxx += t * t;
    sxy += t * r;
    syy += r * r;
  }
  const double cov = sxy - sx * sy / n;
  const double vx = sxx - sx * sx / n;
  const double vy = syy - sy * sy / n;
  rep.radius_slope = cov / vx;
  rep.radius_fit_r2 = vy > 0.0 ? cov * cov / (vx * vy) : 1.0;
  rep.final_radius = singular_values(trajectory.samples().back().A)(0);
  rep.linear_growth = rep.radius_slope > 0.0 && rep.radius_fit_r2 > 0.999;

  // Fibonacci directions on the unit sphere.
  const Mat3 A = trajectory.at_time(t_probe).A;
  constexpr int kDirections = 64;
  rep.cs2_normal_min = std::numeric_limits<double>::infinity();
  rep.cs2_normal_max = -std::numeric_limits<double>::infinity();
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < kDirections; ++k) {
    const double z = 1.0 - 2.0 * (k + 0.5) / kDirections;
    const double rho = std::sqrt(1.0 - z * z);
    const Vec3 dir(rho * std::cos(golden * k), rho * std::sin(golden * k), z);
    const double d = sound_speed_normal_derivative(A, trajectory.params(), dir);
    rep.cs2_normal_min = std::min(rep.cs2_normal_min, d);
    rep.cs2_normal_max = std::max(rep.cs2_normal_max, d);
  }
  rep.physical_vacuum = std::isfinite(rep.cs2_normal_min) && rep.cs2_normal_max < 0.0;
  return rep;
}

void write_field_csv(std::ostream& out, const FieldSampler& field, double t, const std::vector<Vec3>& points) {
  out << "t,x,y,z,rho,ux,uy,uz,in_support\n" << std::setprecision(17);
  for (const Vec3& x : points) {
    const EulerianSample s = field(t, x);
    out << t << ',' << x(0) << ',' << x(1) << ',' << x(2) << ',' << s.rho << ',' << s.u(0) << ',' << s.u(1) << ','
        << s.u(2) << ',' << (s.in_support ? 1 : 0) << '\n';
  }
}

}  // namespace affinelab
