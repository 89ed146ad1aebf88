#include <doctest.h>

#include "affinelab/eulerian_fields.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace affinelab;

namespace {

const GammaParams kMonatomic = GammaParams::make(5.0 / 3.0, 1.0);

std::shared_ptr<const AffineTrajectory> isotropic_run(double t_end) {
  return std::make_shared<const AffineTrajectory>(
      integrate_affine(kMonatomic, Mat3::Identity(), Mat3::Zero(), t_end));
}

std::shared_ptr<const AffineTrajectory> sheared_run(const GammaParams& params, double t_end) {
  Mat3 A0;
  A0 << 1.2, 0.15, 0.0, -0.1, 0.95, 0.05, 0.0, 0.1, 1.0 / 1.1;
  Mat3 A1;
  A1 << 0.2, -0.3, 0.0, 0.25, 0.1, 0.05, 0.0, 0.1, -0.1;
  return std::make_shared<const AffineTrajectory>(integrate_affine(params, A0, A1, t_end));
}

// 4 pi w0^alpha int_0^1 r^2 (1 - r^2)^alpha dr by adaptive Gauss-Kronrod.
double radial_mass_oracle(const GammaParams& p) {
  const double w0 = p.delta() * (p.gamma() - 1.0) / (2.0 * p.gamma());
  const auto f = [&](double r) { return r * r * std::pow(1.0 - r * r, p.alpha()); };
  const double I = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 1.0, 15, 1e-14);
  return 4.0 * std::numbers::pi * std::pow(w0, p.alpha()) * I;
}

}  // namespace

TEST_CASE("affine density at the centre, on the boundary and outside") {
  CHECK(affine_density(Mat3::Identity(), kMonatomic, Vec3::Zero()) == doctest::Approx(std::pow(0.2, 1.5)));
  CHECK(std::pow(0.2, 1.5) == doctest::Approx(0.089443).epsilon(1e-5));
  const Mat3 A = Vec3(2.0, 1.0, 0.5).asDiagonal();
  CHECK(affine_density(A, kMonatomic, Vec3(2.0, 0.0, 0.0)) == 0.0);
  CHECK(affine_density(A, kMonatomic, Vec3(0.0, 0.0, 0.6)) == 0.0);
  CHECK(affine_density(A, kMonatomic, Vec3(1.999, 0.0, 0.0)) > 0.0);
  // Continuity at the boundary: w^alpha with alpha > 0 vanishes there.
  CHECK(affine_density(A, kMonatomic, Vec3(2.0 - 1e-9, 0.0, 0.0)) < 1e-12);
}

TEST_CASE("affine velocity is linear and matches the isotropic rate") {
  CHECK(affine_velocity(Mat3::Identity(), Mat3::Zero(), Vec3(0.3, -0.2, 0.1)).norm() == 0.0);
  const auto traj = isotropic_run(2.0);
  const AffineState st = traj->at_time(1.0);
  const Vec3 x(0.4, -0.3, 0.7);
  CHECK((affine_velocity(st.A, st.A_dot, x) - 0.5 * x).norm() < 1e-7);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat3 A, Ad;
  for (int i = 0; i < 9; ++i) {
    A(i / 3, i % 3) = (i % 4 == 0 ? 1.5 : 0.0) + 0.3 * u(rng);
    Ad(i / 3, i % 3) = u(rng);
  }
  const Vec3 x1(u(rng), u(rng), u(rng)), x2(u(rng), u(rng), u(rng));
  CHECK((affine_velocity(A, Ad, x1 + x2) - affine_velocity(A, Ad, x1) - affine_velocity(A, Ad, x2)).norm() < 1e-13);
}

TEST_CASE("sampler flags the support and keeps rho positive exactly inside it") {
  const auto traj = sheared_run(kMonatomic, 3.0);
  const FieldSampler field = affine_sampler(traj);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int k = 0; k < 500; ++k) {
    const EulerianSample s = field(2.0, Vec3(u(rng), u(rng), u(rng)));
    CHECK(s.rho >= 0.0);
    CHECK((s.rho > 0.0) == s.in_support);
  }
}

TEST_CASE("mass matches the Beta-integral value and is time independent") {
  const double beta_value = std::pow(0.2, 1.5) * std::numbers::pi * std::numbers::pi / 8.0;
  CHECK(radial_mass_oracle(kMonatomic) == doctest::Approx(beta_value).epsilon(1e-12));
  CHECK(beta_value == doctest::Approx(0.1103).epsilon(1e-3));
  CHECK(std::abs(affine_mass(Mat3::Identity(), kMonatomic) - beta_value) < 1e-6 * beta_value);

  const auto traj = sheared_run(kMonatomic, 5.0);
  for (double t : {0.0, 1.0, 2.5, 5.0}) {
    CHECK(std::abs(affine_mass(traj->at_time(t).A, kMonatomic) - beta_value) < 1e-6 * beta_value);
  }
  const auto p14 = GammaParams::make(1.4, 0.6);
  CHECK(std::abs(affine_mass(Vec3(2.0, 1.0, 0.5).asDiagonal(), p14) - radial_mass_oracle(p14)) <
        1e-6 * radial_mass_oracle(p14));
}

TEST_CASE("affine fields solve the Euler equations to second order") {
  for (const double gamma : {1.4, 5.0 / 3.0}) {
    const auto params = GammaParams::make(gamma, 1.0);
    const auto traj = sheared_run(params, 3.0);
    ResidualDomain dom;
    dom.support_map = traj->at_time(1.5).A;
    dom.cells = 32;
    const auto conv = residual_convergence(affine_sampler(traj), params, Mat3::Identity(), dom, 1.5);
    CHECK(conv.fine.points > conv.coarse.points);
    CHECK(conv.continuity_order >= 1.8);
    CHECK(conv.momentum_order >= 1.8);
    CHECK(std::isfinite(conv.fine.momentum_sup));
  }
}

TEST_CASE("constant state has zero residuals") {
  const FieldSampler constant = [](double, const Vec3& x) {
    EulerianSample s;
    s.x = x;
    s.rho = 0.3;
    s.in_support = true;
    return s;
  };
  const auto rep = euler_residual(constant, kMonatomic, Mat3::Identity(), ResidualDomain{}, 0.0);
  CHECK(rep.continuity_l2 == 0.0);
  CHECK(rep.momentum_l2 == 0.0);
}

TEST_CASE("corrupted density spoils momentum convergence") {
  const auto traj = isotropic_run(3.0);
  const FieldSampler exact = affine_sampler(traj);
  const FieldSampler corrupted = [exact](double t, const Vec3& x) {
    EulerianSample s = exact(t, x);
    s.rho *= 1.1;
    return s;
  };
  ResidualDomain dom;
  dom.support_map = traj->at_time(1.0).A;
  const auto conv = residual_convergence(corrupted, kMonatomic, Mat3::Identity(), dom, 1.0);
  CHECK(conv.momentum_order < 0.5);
  CHECK(conv.fine.momentum_l2 > 0.5 * conv.coarse.momentum_l2);
}

TEST_CASE("residual domain too close to vacuum is rejected") {
  ResidualDomain dom;
  dom.interior_radius = 0.95;
  dom.cells = 32;
  CHECK_THROWS_AS(euler_residual(affine_sampler(isotropic_run(2.0)), kMonatomic, Mat3::Identity(), dom, 1.0),
                  ConfigError);
}

TEST_CASE("GL+(3) transform: identity, round trip, conformal invariance") {
  const auto traj = sheared_run(kMonatomic, 4.0);
  const FieldSampler field = affine_sampler(traj);
  const Vec3 y(0.3, -0.2, 0.25);

  const auto same = gl3_transform(field, kMonatomic, Mat3::Identity());
  CHECK(same.time_dilation == 1.0);
  CHECK((same.Lambda - Mat3::Identity()).norm() < 1e-15);
  CHECK(same.sampler(1.0, y).rho == field(1.0, y).rho);

  Mat3 B;
  B << 1.3, 0.2, 0.0, -0.1, 0.8, 0.3, 0.05, 0.0, 1.1;
  const auto there = gl3_transform(field, kMonatomic, B);
  const auto back = gl3_transform(there.sampler, kMonatomic, B.inverse());
  CHECK(back.time_dilation * there.time_dilation == doctest::Approx(1.0).epsilon(1e-14));
  for (double t : {0.5, 1.0, 2.0}) {
    const EulerianSample a = field(t, y);
    const EulerianSample b = back.sampler(t, y);
    CHECK(std::abs(a.rho - b.rho) <= 1e-12 * a.rho);
    CHECK((a.u - b.u).norm() <= 1e-12 * a.u.norm());
  }

  // Conformal B = c I: the transformed pair is again the affine solution with
  // A~(s) = A(s/k)/c, and Lambda = Id.
  const double c = 2.0;
  const auto conf = gl3_transform(field, kMonatomic, c * Mat3::Identity());
  const double k = conf.time_dilation;
  CHECK(k == doctest::Approx(std::pow(c, (1.0 - 3.0 * kMonatomic.gamma()) / 2.0)));
  CHECK((conf.Lambda - Mat3::Identity()).norm() < 1e-14);
  for (double s : {0.25 * k, k, 2.0 * k}) {
    const AffineState st = traj->at_time(s / k);
    const Mat3 At = st.A / c;
    const Mat3 Adt = st.A_dot / (c * k);
    const Vec3 z = 0.3 * At * Vec3(1.0, -0.5, 0.7).normalized();
    const EulerianSample got = conf.sampler(s, z);
    CHECK(std::abs(got.rho - affine_density(At, kMonatomic, z)) <= 1e-12 * got.rho);
    CHECK((got.u - affine_velocity(At, Adt, z)).norm() <= 1e-12 * got.u.norm());
  }
}

TEST_CASE("transformed fields solve the generalized Euler system to second order") {
  const auto traj = sheared_run(kMonatomic, 3.0);
  const FieldSampler field = affine_sampler(traj);
  const double t = 1.5;
  for (const Mat3& B : {Mat3(Vec3(2.0, 1.0, 0.5).asDiagonal()), Mat3(2.0 * Mat3::Identity())}) {
    const auto tr = gl3_transform(field, kMonatomic, B);
    ResidualDomain dom;
    dom.support_map = B.inverse() * traj->at_time(t).A;
    dom.interior_radius = 0.5;
    const double s = tr.time_dilation * t;
    const auto conv = residual_convergence(tr.sampler, kMonatomic, tr.Lambda, dom, s);
    CHECK(conv.continuity_order >= 1.8);
    CHECK(conv.momentum_order >= 1.8);
  }
  // With Lambda = Id the anisotropic transform is not a solution of the original system.
  const Mat3 B = Vec3(2.0, 1.0, 0.5).asDiagonal();
  const auto tr = gl3_transform(field, kMonatomic, B);
  ResidualDomain dom;
  dom.support_map = B.inverse() * traj->at_time(t).A;
  dom.interior_radius = 0.5;
  const auto wrong = residual_convergence(tr.sampler, kMonatomic, Mat3::Identity(), dom, tr.time_dilation * t);
  CHECK(wrong.momentum_order < 0.5);
}

TEST_CASE("support radius and physical vacuum") {
  const Mat3 A = Vec3(2.0, 1.0, 0.5).asDiagonal();
  CHECK(Eigen::JacobiSVD<Mat3>(A).singularValues()(0) == doctest::Approx(2.0));

  CHECK(sound_speed_normal_derivative(Mat3::Identity(), kMonatomic, Vec3(0.0, 0.0, 1.0)) ==
        doctest::Approx(-2.0 / 3.0).epsilon(1e-6));

  const auto traj = isotropic_run(1e3);
  const SupportReport rep = support_and_vacuum_checks(*traj, 0.0);
  CHECK(rep.final_radius == doctest::Approx(std::sqrt(1.0 + 1e6)).epsilon(1e-8));
  CHECK(rep.radius_slope == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(rep.linear_growth);
  CHECK(rep.physical_vacuum);
  CHECK(rep.cs2_normal_min == doctest::Approx(-2.0 / 3.0).epsilon(1e-6));
  CHECK(rep.cs2_normal_max == doctest::Approx(-2.0 / 3.0).epsilon(1e-6));

  const auto sheared = sheared_run(GammaParams::make(1.4, 1.0), 500.0);
  const SupportReport srep = support_and_vacuum_checks(*sheared, 50.0);
  CHECK(srep.linear_growth);
  CHECK(srep.physical_vacuum);
  CHECK(std::isfinite(srep.cs2_normal_min));
}

TEST_CASE("field dump header and row count") {
  std::ostringstream out;
  write_field_csv(out, affine_sampler(isotropic_run(1.0)), 0.5, {Vec3::Zero(), Vec3(5.0, 0.0, 0.0)});
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,x,y,z,rho,ux,uy,uz,in_support");
  int rows = 0;
  std::string last;
  while (std::getline(in, line)) {
    ++rows;
    last = line;
  }
  CHECK(rows == 2);
  CHECK(last.back() == '0');
}
