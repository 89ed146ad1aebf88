#include <doctest.h>

#include "affinelab/ball_calculus.hpp"

#include <cmath>
#include <random>

using namespace affinelab;

namespace {

const GammaParams kMonatomic = GammaParams::make(5.0 / 3.0, 1.0);

double max_over_annulus(const CartesianGrid& g, double lo, double hi, auto&& err) {
  double worst = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n)
    if (g.active(n) && g.radius(n) >= lo && g.radius(n) <= hi) worst = std::max(worst, err(n));
  return worst;
}

// Cubic displacement with seeded coefficients, |D theta| < 1/3 on the ball.
struct RandomCubic {
  std::array<double, 3 * 10> c{};

  explicit RandomCubic(std::mt19937_64& rng, double amplitude) {
    std::uniform_real_distribution<double> u(-amplitude, amplitude);
    for (double& v : c) v = u(rng);
  }

  Vec3 operator()(const Vec3& y) const {
    const double m[10] = {y(0),        y(1),        y(2),        y(0) * y(1), y(1) * y(2),
                          y(0) * y(2), y(0) * y(0), y(1) * y(1) * y(2), y(0) * y(1) * y(2), y(2) * y(2) * y(2)};
    Vec3 out = Vec3::Zero();
    for (int s = 0; s < 3; ++s)
      for (int k = 0; k < 10; ++k) out(s) += c[s * 10 + k] * m[k];
    return out;
  }
};

Mat3 random_spd(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat3 B;
  for (int i = 0; i < 9; ++i) B(i / 3, i % 3) = u(rng);
  return B * B.transpose() + 0.5 * Mat3::Identity();
}

}  // namespace

TEST_CASE("grid layout, weights and cutoff plateaus") {
  const CartesianGrid g(16, kMonatomic);
  CHECK(g.h() == doctest::Approx(0.125));
  std::size_t active = 0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    CHECK(g.psi(n) >= 0.0);
    CHECK(g.psi(n) <= 1.0);
    if (g.radius(n) <= 0.25) CHECK(g.psi(n) == 0.0);
    if (g.radius(n) >= 0.75) CHECK(g.psi(n) == 1.0);
    if (!g.active(n)) continue;
    ++active;
    CHECK(g.w(n) > 0.0);
    CHECK(g.w(n) == doctest::Approx(0.2 * (1.0 - g.radius(n) * g.radius(n))));
  }
  CHECK(active > 0);
  CHECK(g.coords(g.index(3, 7, 11)) == std::array<int, 3>{3, 7, 11});
  CHECK_THROWS_AS(CartesianGrid(2, kMonatomic), ConfigError);

  const RadialGrid rg(64, kMonatomic);
  CHECK(rg.r.front() > 0.0);
  CHECK(rg.r.back() < 1.0);
  CHECK(rg.r[1] - rg.r[0] == doctest::Approx(rg.dr));
  CHECK(rg.w.back() > 0.0);
}

TEST_CASE("difference stencils are exact on quadratics") {
  const CartesianGrid g(24, kMonatomic);
  const ScalarField f = g.sample<double>([](const Vec3& y) { return 1.0 + y(0) - 2.0 * y(1) * y(2) + 0.5 * y(2) * y(2); });
  const ScalarField d2 = partial(g, f, 2);
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (!g.active(n)) continue;
    const Vec3& y = g.node(n);
    // Two-sided and one-sided second-order stencils both reproduce quadratics.
    const bool second_order = (g.neighbor(n, 2, 1) >= 0 && g.neighbor(n, 2, -1) >= 0) ||
                              g.neighbor(n, 2, 2) >= 0 || g.neighbor(n, 2, -2) >= 0;
    if (second_order) CHECK(d2[n] == doctest::Approx(-2.0 * y(1) + y(2)).epsilon(1e-10));
  }
}

TEST_CASE("angular and radial derivatives on simple fields") {
  const CartesianGrid g(32, kMonatomic);
  const ScalarField radial = g.sample<double>([](const Vec3& y) { return std::cos(2.0 * y.norm()); });
  const ScalarField r2 = g.sample<double>([](const Vec3& y) { return y.squaredNorm(); });
  const ScalarField lin = g.sample<double>([](const Vec3& y) { return y(0); });

  for (int i = 0; i < 3; ++i) {
    const ScalarField ang = angular_gradient(g, radial, i);
    CHECK(max_over_annulus(g, 0.2, 0.8, [&](std::size_t n) { return std::abs(ang[n]); }) < 5e-3);
  }
  const ScalarField dr = radial_derivative(g, r2);
  CHECK(max_over_annulus(g, 0.1, 0.85, [&](std::size_t n) { return std::abs(dr[n] - 2.0 * g.radius(n)); }) < 1e-12);

  // grad y_1 projected on the tangent plane: e_1 - y_hat_1 y_hat.
  for (int i = 0; i < 3; ++i) {
    const ScalarField ang = angular_gradient(g, lin, i);
    CHECK(max_over_annulus(g, 0.1, 0.99, [&](std::size_t n) {
            const Vec3 yh = g.node(n) / g.radius(n);
            return std::abs(ang[n] - ((i == 0 ? 1.0 : 0.0) - yh(0) * yh(i)));
          }) < 1e-12);
  }
}

TEST_CASE("grid commutator [d_r, ang_i] against the symbolic oracle") {
  // f = y1 y2^2: grad f = (y2^2, 2 y1 y2, 0); the identity's right side
  // -(1/r) ang_i f is evaluated symbolically.
  double previous = 0.0;
  for (int cells : {48, 96}) {
    const CartesianGrid g(cells, kMonatomic);
    const ScalarField f = g.sample<double>([](const Vec3& y) { return y(0) * y(1) * y(1); });
    double worst = 0.0;
    for (int i = 0; i < 3; ++i) {
      const ScalarField lhs_a = radial_derivative(g, angular_gradient(g, f, i));
      const ScalarField lhs_b = angular_gradient(g, radial_derivative(g, f), i);
      worst = std::max(worst, max_over_annulus(g, 0.3, 0.8, [&](std::size_t n) {
                         const Vec3& y = g.node(n);
                         const double r = y.norm();
                         const Vec3 grad(y(1) * y(1), 2.0 * y(0) * y(1), 0.0);
                         const double ang_exact = grad(i) - y(i) * y.dot(grad) / (r * r);
                         return std::abs(lhs_a[n] - lhs_b[n] + ang_exact / r);
                       }));
    }
    if (previous > 0.0) CHECK(std::log2(previous / worst) >= 1.8);
    previous = worst;
  }
}

TEST_CASE("flow map algebra: scaling, radial Jacobian and inverse identities") {
  const double eps = 0.05;
  const CartesianGrid g(16, kMonatomic);
  const FlowMapDiff scaled = flow_map_jacobian(g, g.sample<Vec3>([&](const Vec3& y) { return Vec3(eps * y); }));
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (!g.active(n)) continue;
    CHECK((scaled.Deta[n] - (1.0 + eps) * Mat3::Identity()).norm() < 1e-12);
    CHECK(scaled.J[n] == doctest::Approx(std::pow(1.0 + eps, 3)).epsilon(1e-12));
    CHECK((scaled.InvJac[n] - Mat3::Identity() / (1.0 + eps)).norm() < 1e-12);
  }

  // eta = h(r) y with h = 1 + eps (1 - r^2): J = h^2 (h + r h_r).
  double previous = 0.0;
  for (int cells : {16, 32, 64}) {
    const CartesianGrid gr(cells, kMonatomic);
    const FlowMapDiff fmd =
        flow_map_jacobian(gr, gr.sample<Vec3>([&](const Vec3& y) { return Vec3(eps * (1.0 - y.squaredNorm()) * y); }));
    double worst = 0.0;
    for (std::size_t n = 0; n < gr.size(); ++n) {
      if (!gr.active(n)) continue;
      const double r = gr.radius(n);
      const double hr = 1.0 + eps * (1.0 - r * r);
      const double oracle = hr * hr * (hr - 2.0 * eps * r * r);
      if (r < 0.8) worst = std::max(worst, std::abs(fmd.J[n] - oracle));
      CHECK((fmd.InvJac[n] * fmd.Deta[n] - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((fmd.cof[n] - fmd.J[n] * fmd.InvJac[n]).cwiseAbs().maxCoeff() < 1e-12);
    }
    if (previous > 0.0) CHECK(std::log2(previous / worst) >= 1.8);
    previous = worst;
  }
}

TEST_CASE("differentiation formula for InvJac on the grid") {
  std::mt19937_64 rng(3);
  const RandomCubic theta(rng, 0.05);
  double previous = 0.0;
  for (int cells : {24, 48}) {
    const CartesianGrid g(cells, kMonatomic);
    const FlowMapDiff fmd = flow_map_jacobian(g, g.sample<Vec3>(theta));
    double worst = 0.0;
    for (int l = 0; l < 3; ++l) {
      const MatrixField fd = partial(g, fmd.InvJac, l);
      const MatrixField dDeta = partial(g, fmd.Deta, l);
      worst = std::max(worst, max_over_annulus(g, 0.0, 0.7, [&](std::size_t n) {
                         const Mat3 product = -fmd.InvJac[n] * dDeta[n] * fmd.InvJac[n];
                         return (fd[n] - product).cwiseAbs().maxCoeff();
                       }));
    }
    if (previous > 0.0) CHECK(std::log2(previous / worst) >= 1.8);
    previous = worst;
  }
}

TEST_CASE("degenerate flow map is rejected") {
  const CartesianGrid g(12, kMonatomic);
  const VectorField fold = g.sample<Vec3>([](const Vec3& y) { return Vec3(-2.0 * y(0), 0.0, 0.0); });
  CHECK_THROWS_AS(flow_map_jacobian(g, fold), NumericalFailure);
}

TEST_CASE("Lie operators: identity chart and the standard curl") {
  const CartesianGrid g(12, kMonatomic);
  const FlowMapDiff id = flow_map_jacobian(g, VectorField(g.size(), Vec3::Zero()));
  const VectorField rot = g.sample<Vec3>([](const Vec3& y) { return Vec3(-y(1), y(0), 0.0); });
  const LieFields lie = lie_operators(g, rot, id, Mat3::Identity());
  const MatrixField D = gradient(g, rot);
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (!g.active(n)) continue;
    CHECK((lie.curl[n] - Vec3(0.0, 0.0, 2.0)).norm() < 1e-12);
    CHECK(std::abs(lie.div[n]) < 1e-12);
    CHECK((lie.grad[n] - D[n]).norm() == 0.0);
    CHECK((lie.Curl[n] + lie.Curl[n].transpose()).norm() < 1e-14);
  }
}

TEST_CASE("Lambda-curl annihilates Lambda eta for random admissible fields") {
  std::mt19937_64 rng(2024);
  double worst_curl = 0.0, worst_inverse = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const CartesianGrid g(10, kMonatomic);
    const RandomCubic theta(rng, 0.05);
    const Mat3 Lambda = random_spd(rng);
    const VectorField th = g.sample<Vec3>(theta);
    const FlowMapDiff fmd = flow_map_jacobian(g, th);
    VectorField F(g.size(), Vec3::Zero());
    for (std::size_t n = 0; n < g.size(); ++n)
      if (g.active(n)) F[n] = Lambda * (g.node(n) + th[n]);
    const LieFields lie = lie_operators(g, F, fmd, Lambda);
    for (std::size_t n = 0; n < g.size(); ++n) {
      if (!g.active(n)) continue;
      worst_curl = std::max(worst_curl, lie.Curl[n].cwiseAbs().maxCoeff());
      worst_curl = std::max(worst_curl, lie.curl[n].cwiseAbs().maxCoeff());
      worst_inverse = std::max(worst_inverse, (fmd.InvJac[n] * fmd.Deta[n] - Mat3::Identity()).cwiseAbs().maxCoeff());
    }
  }
  CHECK(worst_curl <= 1e-12);
  CHECK(worst_inverse <= 1e-12);
}

TEST_CASE("commutator identities converge at second order") {
  for (double gamma : {1.4, 5.0 / 3.0}) {
    const CommutatorReport rep = commutator_suite(GammaParams::make(gamma, 1.0));
    CHECK(rep.identities.size() == 11);
    for (const IdentityResidual& id : rep.identities) {
      INFO(id.name);
      CHECK(id.passed);
      CHECK(id.residual.size() == 4);
      if (id.name == "cartesian derivatives commute") {
        CHECK(id.exact);
      } else {
        CHECK_FALSE(id.exact);
        CHECK(id.min_order >= 1.85);
      }
    }
    CHECK(rep.passed);
  }
}

TEST_CASE("commutator suite rejects bad annuli") {
  CommutatorOptions opt;
  opt.r_outer = 1.2;
  CHECK_THROWS_AS(commutator_suite(kMonatomic, opt), ConfigError);
  opt = CommutatorOptions{};
  opt.spacing = {0.01};
  CHECK_THROWS_AS(commutator_suite(kMonatomic, opt), ConfigError);
}
