#include <doctest.h>

#include "affinelab/fit.hpp"
#include "affinelab/perturbation_solver.hpp"

#include <cmath>
#include <sstream>

using namespace affinelab;

namespace {

const GammaParams kMonatomic = GammaParams::make(5.0 / 3.0, 1.0);

std::shared_ptr<const AffineTrajectory> conformal(double tau_end) {
  return std::make_shared<const AffineTrajectory>(conformal_background(kMonatomic, tau_end));
}

ScalarField radial_bump(const RadialGrid& g, double amplitude) {
  ScalarField out(g.cells);
  for (int i = 0; i < g.cells; ++i) {
    const double r = g.r[i];
    out[i] = amplitude * r * (1.0 - r * r) * (1.0 - r * r);
  }
  return out;
}

// Pairwise average onto the next coarser cell-centred grid.
ScalarField restrict_pairs(const ScalarField& fine) {
  ScalarField out(fine.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.5 * (fine[2 * i] + fine[2 * i + 1]);
  return out;
}

double max_diff(const ScalarField& a, const ScalarField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("solver configuration is validated") {
  SolverConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.cfl = 1.2;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.output_every = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.blowup_factor = 0.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.max_steps = -3;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("radial solver rejects anisotropic and short backgrounds") {
  RadialGrid g(64, kMonatomic);
  const ScalarField zero(g.cells, 0.0);
  SolverConfig cfg;
  cfg.tau_end = 1.0;
  const Mat3 A0 = Vec3(1.3, 1.0, 0.8).asDiagonal();
  auto aniso = std::make_shared<const AffineTrajectory>(
      integrate_affine_to_tau(kMonatomic, A0, Mat3::Identity(), 2.0));
  CHECK_THROWS_AS(solve_radial(kMonatomic, aniso, g, zero, zero, cfg), ConfigError);
  cfg.tau_end = 5.0;
  CHECK_THROWS_AS(solve_radial(kMonatomic, conformal(2.0), g, zero, zero, cfg), ConfigError);
  CHECK_THROWS_AS(solve_radial(kMonatomic, conformal(6.0), g, ScalarField(3, 0.0), zero, cfg), ConfigError);
}

TEST_CASE("zero perturbation is a discrete steady state of the radial solver") {
  RadialGrid g(256, kMonatomic);
  const ScalarField zero(g.cells, 0.0);
  SolverConfig cfg;
  cfg.max_steps = 10000;
  cfg.tau_end = 50.0;
  cfg.keep_snapshots = false;
  const RadialRun run = solve_radial(kMonatomic, conformal(50.0), g, zero, zero, cfg);
  CHECK(run.stats.steps == 10000);
  CHECK(run.stats.max_increment <= 1e-13);
  CHECK(run.snapshots.size() == 2);
}

TEST_CASE("zero perturbation is a discrete steady state of the 3D solver") {
  const GammaParams params = GammaParams::make(1.4, 1.0);
  CartesianGrid g(16, params);
  const VectorField zero(g.size(), Vec3::Zero());
  const Mat3 A0 = Vec3(1.2, 1.0, 1.0 / 1.2).asDiagonal();
  auto bg = std::make_shared<const AffineTrajectory>(integrate_affine_to_tau(params, A0, Mat3::Identity(), 8.0));
  SolverConfig cfg;
  cfg.max_steps = 500;
  cfg.cfl = 0.05;
  cfg.keep_snapshots = false;
  const CartesianRun run = solve_linear3d(params, bg, g, zero, zero, cfg);
  CHECK(run.stats.steps == 500);
  CHECK(run.stats.max_increment <= 1e-13);
}

TEST_CASE("radial solver converges at second order under refinement") {
  const double tau_end = 1.0;
  auto bg = conformal(tau_end + 0.5);
  SolverConfig cfg;
  cfg.tau_end = tau_end;
  cfg.output_every = tau_end;
  ScalarField finals[3];
  const int cells[3] = {128, 256, 512};
  for (int k = 0; k < 3; ++k) {
    RadialGrid g(cells[k], kMonatomic);
    const RadialRun run = solve_radial(kMonatomic, bg, g, radial_bump(g, 1e-2), ScalarField(g.cells, 0.0), cfg);
    REQUIRE(run.snapshots.back().tau == doctest::Approx(tau_end));
    finals[k] = run.snapshots.back().theta;
  }
  const double coarse = max_diff(restrict_pairs(finals[1]), finals[0]);
  const double fine = max_diff(restrict_pairs(finals[2]), finals[1]);
  CHECK(coarse > 0.0);
  CHECK(std::log2(coarse / fine) >= 1.7);
}

TEST_CASE("radial velocity decays at the predicted rate on the conformal background") {
  RadialGrid g(512, kMonatomic);
  SolverConfig cfg;
  cfg.tau_end = 6.0;
  cfg.output_every = 0.1;
  const RadialRun run =
      solve_radial(kMonatomic, conformal(6.5), g, radial_bump(g, 1e-3), ScalarField(g.cells, 0.0), cfg,
                   {}, [&](const RadialSnapshot& s) { return default_monitor(g, kMonatomic, s); });
  std::vector<double> tau, norm;
  for (const auto& s : run.snapshots) {
    tau.push_back(s.tau);
    norm.push_back(weighted_l2(g, s.V, kMonatomic.alpha()));
  }
  const DecayFit fit = decay_fit(tau, norm);
  // mu0 = 1 for the monatomic conformal background.
  CHECK(-fit.rate == doctest::Approx(1.0).epsilon(0.15));
  CHECK(run.stats.monitor_peak <= 3.0 * run.stats.monitor_initial);
  CHECK(run.stats.min_jacobian > 0.9);

  const AttractorReport attractor = attractor_estimate(g, kMonatomic, run.snapshots);
  CHECK(attractor.monotone);
  CHECK(attractor.ladder_tau.size() >= 4);
  CHECK(attractor.predicted_rate == doctest::Approx(-1.0));
}

TEST_CASE("3D linear solver agrees with the radial solver on radial data") {
  const double tau_end = 1.0;
  auto bg = conformal(tau_end + 0.5);
  SolverConfig cfg;
  cfg.tau_end = tau_end;
  cfg.output_every = tau_end;
  RadialGrid rg(1024, kMonatomic);
  const ScalarField th0 = radial_bump(rg, 1e-6);
  const RadialRun radial = solve_radial(kMonatomic, bg, rg, th0, ScalarField(rg.cells, 0.0), cfg);

  CartesianGrid g(48, kMonatomic);
  const CartesianRun lin =
      solve_linear3d(kMonatomic, bg, g, embed_radial(g, rg, th0), VectorField(g.size(), Vec3::Zero()), cfg);
  const VectorField reference = embed_radial(g, rg, radial.snapshots.back().V);
  VectorField diff(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) diff[n] = lin.snapshots.back().V[n] - reference[n];
  const double ref_norm = weighted_l2(g, reference, kMonatomic.alpha());
  REQUIRE(ref_norm > 0.0);
  CHECK(weighted_l2(g, diff, kMonatomic.alpha()) / ref_norm <= 1e-2);
}

TEST_CASE("instability detector aborts on a growing monitor") {
  RadialGrid g(64, kMonatomic);
  SolverConfig cfg;
  cfg.tau_end = 2.0;
  cfg.output_every = 0.1;
  const auto growing = [](const RadialSnapshot& s) { return std::exp(5.0 * s.tau); };
  CHECK_THROWS_AS(solve_radial(kMonatomic, conformal(3.0), g, radial_bump(g, 1e-3), ScalarField(g.cells, 0.0),
                               cfg, {}, growing),
                  NumericalFailure);

  const GammaParams stiff = GammaParams::make(2.0, 1.0);
  RadialGrid g2(64, stiff);
  auto bg2 = std::make_shared<const AffineTrajectory>(conformal_background(stiff, 3.0));
  CHECK_NOTHROW(solve_radial(stiff, bg2, g2, radial_bump(g2, 1e-3), ScalarField(g2.cells, 0.0), cfg, {}, growing));
}

TEST_CASE("observer sees every output and snapshots land on the output grid") {
  RadialGrid g(64, kMonatomic);
  SolverConfig cfg;
  cfg.tau_end = 1.0;
  cfg.output_every = 0.25;
  int seen = 0;
  const RadialRun run = solve_radial(kMonatomic, conformal(1.5), g, radial_bump(g, 1e-3), ScalarField(g.cells, 0.0),
                                     cfg, [&](const RadialSnapshot&) { ++seen; });
  REQUIRE(run.snapshots.size() == 5);
  CHECK(seen == 5);
  for (std::size_t k = 0; k < run.snapshots.size(); ++k) CHECK(run.snapshots[k].tau == doctest::Approx(0.25 * k));
}

TEST_CASE("attractor estimate needs a long enough series") {
  RadialGrid g(32, kMonatomic);
  std::vector<RadialSnapshot> series(3);
  for (std::size_t k = 0; k < series.size(); ++k) {
    series[k].tau = 0.5 * k;
    series[k].theta.assign(g.cells, 0.0);
    series[k].V.assign(g.cells, 0.0);
  }
  CHECK_THROWS_AS(attractor_estimate(g, kMonatomic, series), ConfigError);
}

TEST_CASE("polynomial initial data vanishes at the boundary and is rotational") {
  CartesianGrid g(24, kMonatomic);
  const CartesianData data = polynomial_initial_data(g, 1e-3);
  double outer = 0.0, inner = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (!g.active(n)) {
      CHECK(data.theta[n].norm() == 0.0);
      continue;
    }
    (g.radius(n) > 0.95 ? outer : inner) = std::max(g.radius(n) > 0.95 ? outer : inner, data.theta[n].norm());
  }
  CHECK(outer < 0.05 * inner);
  const FlowMapDiff fmd = flow_map_jacobian(g, data.theta);
  const LieFields lie = lie_operators(g, data.theta, fmd, Mat3::Identity());
  double curl = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n)
    if (g.active(n)) curl = std::max(curl, lie.curl[n].norm());
  CHECK(curl > 1e-4);
}

TEST_CASE("CSV writers emit a header and one row per node and snapshot") {
  RadialGrid g(8, kMonatomic);
  std::vector<RadialSnapshot> series(2);
  for (auto& s : series) {
    s.theta.assign(g.cells, 0.0);
    s.V.assign(g.cells, 0.0);
  }
  std::ostringstream out;
  write_radial_csv(out, g, series);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "tau,r,theta,V");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 16);
}
