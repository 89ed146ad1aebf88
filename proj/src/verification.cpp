#include "affinelab/verification.hpp"

#include "affinelab/affine_dynamics.hpp"
#include "affinelab/ball_calculus.hpp"
#include "affinelab/energy_diagnostics.hpp"
#include "affinelab/eulerian_fields.hpp"
#include "affinelab/fit.hpp"
#include "affinelab/perturbation_solver.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>

namespace affinelab {

std::string to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::ReportOnly: return "report-only";
  }
  return "report-only";
}

CheckStatus Verdict::status() const {
  bool judged = false;
  for (const CheckPart& p : parts) {
    if (p.status == CheckStatus::Fail) return CheckStatus::Fail;
    judged = judged || p.status == CheckStatus::Pass;
  }
  return judged ? CheckStatus::Pass : CheckStatus::ReportOnly;
}

namespace {

CheckStatus judge(bool ok) { return ok ? CheckStatus::Pass : CheckStatus::Fail; }

}  // namespace

// NaN measurements fail every comparison.
CheckPart& Verdict::at_most(std::string part, double measured, double bound) {
  parts.push_back({std::move(part), judge(measured <= bound), measured, bound, 0.0, "<="});
  return parts.back();
}

CheckPart& Verdict::at_least(std::string part, double measured, double bound) {
  parts.push_back({std::move(part), judge(measured >= bound), measured, bound, 0.0, ">="});
  return parts.back();
}

CheckPart& Verdict::relative(std::string part, double measured, double target, double tolerance) {
  const bool ok = std::abs(measured / target - 1.0) <= tolerance;
  parts.push_back({std::move(part), judge(ok), measured, target, tolerance, "~rel"});
  return parts.back();
}

CheckPart& Verdict::holds(std::string part, bool value) {
  parts.push_back({std::move(part), judge(value), value ? 1.0 : 0.0, 1.0, 0.0, "=="});
  return parts.back();
}

CheckPart& Verdict::report(std::string part, double measured) {
  parts.push_back({std::move(part), CheckStatus::ReportOnly, measured, 0.0, 0.0, "report"});
  return parts.back();
}

CheckPart& Verdict::runtime(std::string part, double seconds, double budget) {
  CheckPart& p = at_most(std::move(part), seconds, budget);
  p.timing = true;
  return p;
}

double Tolerances::get(const std::string& verdict, const std::string& part, double fallback) const {
  if (auto it = overrides_.find(verdict + "/" + part); it != overrides_.end()) return it->second;
  if (auto it = overrides_.find(part); it != overrides_.end()) return it->second;
  return fallback;
}

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void note(const VerifyContext& ctx, const std::string& line) {
  if (ctx.log) ctx.log(line);
}

// Pinned tolerance with an optional override.
struct Pins {
  const VerifyContext& ctx;
  std::string verdict;
  double operator()(const std::string& part, double fallback) const {
    return ctx.tolerances.get(verdict, part, fallback);
  }
};

std::string tag(double gamma) {
  if (std::abs(gamma - 5.0 / 3.0) < 1e-12) return "gamma=5/3";
  std::ostringstream s;
  s << "gamma=" << gamma;
  return s.str();
}

Mat3 random_matrix(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Mat3 M;
  for (int i = 0; i < 9; ++i) M(i / 3, i % 3) = u(rng);
  return M;
}

Mat3 random_spd(std::mt19937_64& rng) {
  const Mat3 B = random_matrix(rng, 1.0);
  return B * B.transpose() + 0.5 * Mat3::Identity();
}

// Seeded cubic displacement; with amplitude 0.05 |D theta| < 1/3 on the ball.
struct RandomCubic {
  std::array<double, 30> c{};

  RandomCubic(std::mt19937_64& rng, double amplitude) {
    std::uniform_real_distribution<double> u(-amplitude, amplitude);
    for (double& v : c) v = u(rng);
  }

  Vec3 operator()(const Vec3& y) const {
    const double m[10] = {y(0),        y(1),        y(2),        y(0) * y(1),        y(1) * y(2),
                          y(0) * y(2), y(0) * y(0), y(1) * y(1) * y(2), y(0) * y(1) * y(2), y(2) * y(2) * y(2)};
    Vec3 out = Vec3::Zero();
    for (int s = 0; s < 3; ++s)
      for (int k = 0; k < 10; ++k) out(s) += c[s * 10 + k] * m[k];
    return out;
  }
};

// Anisotropic data shared by the seeded asymptotics checks.
struct AffineSeed {
  Mat3 A0;
  Mat3 A1;
};

AffineSeed affine_seed(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  AffineSeed s{Mat3::Identity(), Mat3::Zero()};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      s.A0(i, j) += 0.3 * u(rng);
      s.A1(i, j) = 0.5 * u(rng);
    }
  return s;
}

// Expansion rate of the background started from (A0, A1): mu(t)/t at late time.
double expansion_rate(const GammaParams& params, const Mat3& A0, const Mat3& A1) {
  return asymptotics_report(integrate_affine(params, A0, A1, 1e6)).mu1;
}

ScalarField radial_bump(const RadialGrid& g, double amplitude) {
  ScalarField out(g.cells);
  for (int i = 0; i < g.cells; ++i) {
    const double r = g.r[i];
    out[i] = amplitude * r * (1.0 - r * r) * (1.0 - r * r);
  }
  return out;
}

std::shared_ptr<const AffineTrajectory> sheared_background(const GammaParams& params, double t_end) {
  Mat3 A0;
  A0 << 1.2, 0.15, 0.0, -0.1, 0.95, 0.05, 0.0, 0.1, 1.0 / 1.1;
  Mat3 A1;
  A1 << 0.2, -0.3, 0.0, 0.25, 0.1, 0.05, 0.0, 0.1, -0.1;
  return std::make_shared<const AffineTrajectory>(integrate_affine(params, A0, A1, t_end));
}

const Mat3 kAnisotropicStart = Vec3(1.2, 1.0, 1.0 / 1.2).asDiagonal();

}  // namespace

// ---------------------------------------------------------------------------

Verdict check_affine_exactness(const VerifyContext& ctx) {
  Verdict v{1, "affine_ode_exactness", {}};
  const Pins pin{ctx, v.name};
  const Stopwatch clock;
  const auto params = GammaParams::make(5.0 / 3.0, 1.0);
  const AffineTrajectory traj = integrate_affine(params, Mat3::Identity(), Mat3::Zero(), 1e3);
  const double exact = std::sqrt(101.0);
  const AffineState at10 = traj.at_time(10.0);
  double offdiag = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) offdiag = std::max(offdiag, std::abs(at10.A(i, j) - (i == j ? at10.A(0, 0) : 0.0)));
  const double e0 = ode_energy(params, traj.samples().front().A, traj.samples().front().A_dot);
  double drift = 0.0;
  for (const AffineState& s : traj.samples()) drift = std::max(drift, std::abs(ode_energy(params, s.A, s.A_dot) - e0));
  const double seconds = clock.seconds();
  v.at_most("a(10)_relative_error", std::abs(at10.A(0, 0) / exact - 1.0), pin("a(10)_relative_error", 1e-8));
  v.at_most("isotropy_defect", offdiag, pin("isotropy_defect", 1e-12));
  v.at_most("energy_drift_relative", drift / std::abs(e0), pin("energy_drift_relative", 1e-8));
  v.report("accepted_steps", static_cast<double>(traj.samples().size()));
  v.runtime("runtime_s", seconds, pin("runtime_s", 1.0));
  note(ctx, "criterion 1 done");
  return v;
}

Verdict check_asymptotics(const VerifyContext& ctx) {
  Verdict v{2, "affine_asymptotics", {}};
  const Pins pin{ctx, v.name};
  const double mu_tol = pin("mu_over_t", 0.01);
  const double rate_tol = pin("exponent", 0.05);
  for (const double gamma : {1.4, 5.0 / 3.0}) {
    const auto params = GammaParams::make(gamma, 1.0);
    for (std::uint64_t k = 0; k < 3; ++k) {
      const Stopwatch clock;
      const AffineSeed seed = affine_seed(ctx.seed + k);
      const AffineTrajectory traj = integrate_affine(params, seed.A0, seed.A1, 1e6);
      const AsymptoticsReport rep = asymptotics_report(traj);
      const double mu_over_t = std::cbrt(traj.at_time(1e4).A.determinant()) / 1e4;
      const std::string id = tag(gamma) + "/seed" + std::to_string(k) + "/";
      v.holds(id + "reliable", rep.reliable);
      v.relative(id + "mu_over_t", mu_over_t, rep.mu1, mu_tol);
      v.relative(id + "gamma_star_exponent", rep.gamma_star_rate, -rep.mu1, rate_tol);
      v.relative(id + "lambda_tau_exponent", rep.lambda_tau_rate, -rep.mu1, rate_tol);
      // Envelope C e^{-2 mu0 tau}: the fitted tail rate may not be slower
      // than -2 mu0 beyond the exponent tolerance.
      v.at_most(id + "lambda_tautau_exponent", rep.lambda_tautau_rate, -2.0 * rep.mu0 * (1.0 - rate_tol));
      v.report(id + "mu1", rep.mu1);
      v.runtime(id + "runtime_s", clock.seconds(), pin("runtime_s", 10.0));
    }
  }
  note(ctx, "criterion 2 done");
  return v;
}

Verdict check_algebraic_identities(const VerifyContext& ctx) {
  Verdict v{3, "algebraic_identities", {}};
  const Pins pin{ctx, v.name};
  const Stopwatch clock;
  const auto params = GammaParams::make(5.0 / 3.0, 1.0);
  std::mt19937_64 rng(ctx.seed);
  const CartesianGrid grid(10, params);
  double worst_curl = 0.0, worst_inverse = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const RandomCubic cubic(rng, 0.05);
    const Mat3 Lambda = random_spd(rng);
    const VectorField theta = grid.sample<Vec3>(cubic);
    const FlowMapDiff fmd = flow_map_jacobian(grid, theta);
    VectorField F(grid.size(), Vec3::Zero());
    for (std::size_t n = 0; n < grid.size(); ++n)
      if (grid.active(n)) F[n] = Lambda * (grid.node(n) + theta[n]);
    const LieFields lie = lie_operators(grid, F, fmd, Lambda);
    for (std::size_t n = 0; n < grid.size(); ++n) {
      if (!grid.active(n)) continue;
      worst_curl = std::max({worst_curl, lie.Curl[n].cwiseAbs().maxCoeff(), lie.curl[n].cwiseAbs().maxCoeff()});
      worst_inverse =
          std::max(worst_inverse, (fmd.InvJac[n] * fmd.Deta[n] - Mat3::Identity()).cwiseAbs().maxCoeff());
    }
  }
  double worst_key = 0.0;
  for (std::uint64_t k = 0; k < 20; ++k)
    worst_key = std::max(worst_key, key_identity_check(random_matrix_path(ctx.seed + k), 0.0, 1.0, 21).max_residual);
  v.at_most("lambda_curl_of_lambda_eta", worst_curl, pin("lambda_curl_of_lambda_eta", 1e-12));
  v.at_most("inverse_jacobian_times_jacobian", worst_inverse, pin("inverse_jacobian_times_jacobian", 1e-12));
  v.at_most("trace_identity_residual", worst_key, pin("trace_identity_residual", 1e-6));
  v.runtime("runtime_s", clock.seconds(), pin("runtime_s", 5.0));
  note(ctx, "criterion 3 done");
  return v;
}

Verdict check_commutators(const VerifyContext& ctx) {
  Verdict v{4, "commutator_suite", {}};
  const Pins pin{ctx, v.name};
  const Stopwatch clock;
  CommutatorOptions opt;
  opt.seed = ctx.seed;
  opt.order_floor = pin("order", 1.85);
  for (const double gamma : {1.4, 5.0 / 3.0}) {
    const CommutatorReport rep = commutator_suite(GammaParams::make(gamma, 1.0), opt);
    v.at_least(tag(gamma) + "/identities", static_cast<double>(rep.identities.size()), 11.0);
    for (const IdentityResidual& id : rep.identities) {
      const std::string name = tag(gamma) + "/" + id.name;
      if (id.exact)
        v.at_most(name + "/residual", *std::max_element(id.residual.begin(), id.residual.end()),
                  opt.exact_tolerance);
      else
        v.at_least(name + "/order", id.min_order, opt.order_floor);
    }
  }
  v.runtime("runtime_s", clock.seconds(), pin("runtime_s", 30.0));
  note(ctx, "criterion 4 done");
  return v;
}

Verdict check_euler_residuals(const VerifyContext& ctx) {
  Verdict v{5, "euler_residuals", {}};
  const Pins pin{ctx, v.name};
  const Stopwatch clock;
  const double floor = pin("order", 1.8);
  const double t = 1.5;
  for (const double gamma : {1.4, 5.0 / 3.0}) {
    const auto params = GammaParams::make(gamma, 1.0);
    const auto traj = sheared_background(params, 3.0);
    const FieldSampler field = affine_sampler(traj);
    ResidualDomain dom;
    dom.support_map = traj->at_time(t).A;
    dom.cells = 32;
    const ResidualConvergence conv = residual_convergence(field, params, Mat3::Identity(), dom, t);
    v.at_least(tag(gamma) + "/continuity_order", conv.continuity_order, floor);
    v.at_least(tag(gamma) + "/momentum_order", conv.momentum_order, floor);

    // Conformal B = c Id: the transformed pair must be the affine solution
    // with A(s/k)/c exactly, and keep its residual order with Lambda = Id.
    const double c = 2.0;
    const TransformedField tr = gl3_transform(field, params, c * Mat3::Identity());
    const double k = tr.time_dilation;
    double mismatch = 0.0;
    const Vec3 dir = Vec3(1.0, -0.5, 0.7).normalized();
    for (const double s : {0.25 * k, k, 2.0 * k}) {
      const AffineState st = traj->at_time(s / k);
      const Mat3 At = st.A / c;
      const Mat3 Adt = st.A_dot / (c * k);
      for (const double frac : {0.1, 0.3, 0.6}) {
        const Vec3 z = frac * At * dir;
        const EulerianSample got = tr.sampler(s, z);
        const double rho = affine_density(At, params, z);
        mismatch = std::max({mismatch, std::abs(got.rho - rho) / rho,
                             (got.u - affine_velocity(At, Adt, z)).norm() / got.u.norm()});
      }
    }
    v.at_most(tag(gamma) + "/conformal_invariance", mismatch, pin("conformal_invariance", 1e-12));
    v.at_most(tag(gamma) + "/conformal_lambda_defect", (tr.Lambda - Mat3::Identity()).norm(), 1e-12);
    ResidualDomain tdom;
    tdom.support_map = traj->at_time(t).A / c;
    tdom.interior_radius = 0.5;
    tdom.cells = 32;
    const ResidualConvergence tconv = residual_convergence(tr.sampler, params, tr.Lambda, tdom, k * t);
    v.at_least(tag(gamma) + "/transformed_continuity_order", tconv.continuity_order, floor);
    v.at_least(tag(gamma) + "/transformed_momentum_order", tconv.momentum_order, floor);
  }
  v.runtime("runtime_s", clock.seconds(), pin("runtime_s", 120.0));
  note(ctx, "criterion 5 done");
  return v;
}

Verdict check_steady_state(const VerifyContext& ctx) {
  Verdict v{6, "perturbation_steady_state", {}};
  const Pins pin{ctx, v.name};
  const double bound = pin("max_increment", 1e-13);
  const long steps = 10000;
  {
    const auto params = GammaParams::make(5.0 / 3.0, 1.0);
    const RadialGrid g(256, params);
    const ScalarField zero(g.cells, 0.0);
    SolverConfig cfg;
    cfg.max_steps = steps;
    cfg.tau_end = 50.0;
    cfg.keep_snapshots = false;
    auto bg = std::make_shared<const AffineTrajectory>(conformal_background(params, cfg.tau_end));
    const RadialRun run = solve_radial(params, bg, g, zero, zero, cfg);
    v.at_least("radial/steps", static_cast<double>(run.stats.steps), static_cast<double>(steps));
    v.at_most("radial/max_increment", run.stats.max_increment, bound);
  }
  {
    // The step grows with mu, so a small grid reaches 10^4 steps within a
    // moderate tau range.
    const auto params = GammaParams::make(1.4, 1.0);
    const CartesianGrid g(12, params);
    const VectorField zero(g.size(), Vec3::Zero());
    SolverConfig cfg;
    cfg.max_steps = steps;
    cfg.cfl = 0.02;
    cfg.tau_end = 60.0;
    cfg.keep_snapshots = false;
    auto bg = std::make_shared<const AffineTrajectory>(
        integrate_affine_to_tau(params, kAnisotropicStart, Mat3::Identity(), cfg.tau_end + 0.5));
    const CartesianRun run = solve_linear3d(params, bg, g, zero, zero, cfg);
    v.at_least("linear3d/steps", static_cast<double>(run.stats.steps), static_cast<double>(steps));
    v.at_most("linear3d/max_increment", run.stats.max_increment, bound);
  }
  note(ctx, "criterion 6 done");
  return v;
}

// ---------------------------------------------------------------------------

struct DecayRuns {
  DecayRunSpec spec;

  GammaParams radial_params = GammaParams::make(5.0 / 3.0, 1.0);
  RadialGrid radial_grid{16, radial_params};
  RadialRun radial;
  double radial_mu0 = 0.0;
  DecayFit radial_velocity_fit;
  RunDiagnostics radial_diagnostics;
  AttractorReport radial_attractor;
  double radial_seconds = 0.0;

  GammaParams cartesian_params = GammaParams::make(1.4, 1.0);
  CartesianGrid cartesian_grid{4, cartesian_params};
  CartesianRun cartesian;
  double cartesian_mu0 = 0.0;
  DecayFit cartesian_velocity_fit;
  CurlTransportReport curl;
  RunDiagnostics cartesian_diagnostics;
  AttractorReport cartesian_attractor;
  double cartesian_seconds = 0.0;
};

std::shared_ptr<const DecayRuns> run_decay_experiments(const DecayRunSpec& spec, const VerifyContext& ctx) {
  auto out = std::make_shared<DecayRuns>();
  out->spec = spec;
  {
    const Stopwatch clock;
    const GammaParams& p = out->radial_params;
    out->radial_grid = RadialGrid(spec.radial_cells, p);
    const RadialGrid& g = out->radial_grid;
    const double mu1 = expansion_rate(p, Mat3::Identity(), Mat3::Zero());
    out->radial_mu0 = 1.5 * (p.gamma() - 1.0) * mu1;
    SolverConfig cfg;
    cfg.tau_end = spec.tau_end;
    cfg.output_every = spec.radial_output_every;
    auto bg = std::make_shared<const AffineTrajectory>(conformal_background(p, spec.tau_end + 0.5));
    out->radial = solve_radial(p, bg, g, radial_bump(g, spec.amplitude), ScalarField(g.cells, 0.0), cfg, {},
                               [&](const RadialSnapshot& s) { return default_monitor(g, p, s); });
    std::vector<double> tau, norm;
    for (const RadialSnapshot& s : out->radial.snapshots) {
      tau.push_back(s.tau);
      norm.push_back(weighted_l2(g, s.V, p.alpha()));
    }
    out->radial_velocity_fit = decay_fit(tau, norm);
    out->radial_diagnostics = diagnose_run(g, p, out->radial.snapshots);
    out->radial_attractor = attractor_estimate(g, p, out->radial.snapshots);
    out->radial_seconds = clock.seconds();
    note(ctx, "radial decay run done");
  }
  {
    const Stopwatch clock;
    const GammaParams& p = out->cartesian_params;
    out->cartesian_grid = CartesianGrid(spec.cartesian_cells, p);
    const CartesianGrid& g = out->cartesian_grid;
    const double mu1 = expansion_rate(p, kAnisotropicStart, Mat3::Identity());
    out->cartesian_mu0 = 1.5 * (p.gamma() - 1.0) * mu1;
    SolverConfig cfg;
    cfg.tau_end = spec.tau_end;
    cfg.output_every = spec.cartesian_output_every;
    auto bg = std::make_shared<const AffineTrajectory>(
        integrate_affine_to_tau(p, kAnisotropicStart, Mat3::Identity(), spec.tau_end + 0.5));
    const CartesianData data = polynomial_initial_data(g, spec.amplitude);
    out->cartesian = solve_linear3d(p, bg, g, data.theta, data.V, cfg, {},
                                    [&](const CartesianSnapshot& s) { return default_monitor(g, p, s); });
    std::vector<double> tau, norm;
    for (const CartesianSnapshot& s : out->cartesian.snapshots) {
      tau.push_back(s.tau);
      norm.push_back(weighted_l2(g, s.V, p.alpha()));
    }
    out->cartesian_velocity_fit = decay_fit(tau, norm);
    out->curl = curl_transport_check(g, p, out->cartesian.snapshots);
    out->cartesian_diagnostics = diagnose_run(g, p, out->cartesian.snapshots, 0);
    out->cartesian_attractor = attractor_estimate(g, p, out->cartesian.snapshots);
    out->cartesian_seconds = clock.seconds();
    note(ctx, "3D decay run done");
  }
  return out;
}

Verdict check_decay_rates(const DecayRuns& runs, const VerifyContext& ctx) {
  Verdict v{7, "decay_rates", {}};
  const Pins pin{ctx, v.name};
  const double mu0r = runs.radial_mu0;
  v.relative("radial/velocity_rate", -runs.radial_velocity_fit.rate, mu0r, pin("radial/velocity_rate", 0.15));
  v.report("radial/velocity_fit_r2", runs.radial_velocity_fit.r_squared);
  double s0_initial = runs.radial_diagnostics.reports.front().norm, s0_peak = 0.0;
  for (const NormReport& r : runs.radial_diagnostics.reports) s0_peak = std::max(s0_peak, r.norm);
  v.at_most("radial/norm_growth", s0_peak / s0_initial, pin("radial/norm_growth", 3.0));
  v.report("radial/mu0", mu0r);

  const double mu0c = runs.cartesian_mu0;
  v.relative("linear3d/velocity_rate", -runs.cartesian_velocity_fit.rate, mu0c, pin("linear3d/velocity_rate", 0.20));
  v.report("linear3d/velocity_fit_r2", runs.cartesian_velocity_fit.r_squared);
  v.relative("linear3d/vorticity_rate", -runs.curl.vorticity_fit.rate, 2.0 * mu0c,
             pin("linear3d/vorticity_rate", 0.20));
  v.report("linear3d/vorticity_fit_r2", runs.curl.vorticity_fit.r_squared);
  v.report("linear3d/curl_transport_residual", runs.curl.max_residual);
  v.report("linear3d/mu0", mu0c);
  v.runtime("runtime_s", runs.radial_seconds + runs.cartesian_seconds, pin("runtime_s", 600.0));
  return v;
}

Verdict check_norm_energy(const DecayRuns& runs, const VerifyContext& ctx) {
  Verdict v{8, "norm_energy_equivalence", {}};
  const Pins pin{ctx, v.name};
  const double bound = pin("ratio_spread", 50.0);
  v.at_most("radial/ratio_spread", runs.radial_diagnostics.ratio_spread, bound);
  v.report("radial/ratio_min", runs.radial_diagnostics.ratio_min);
  v.report("radial/ratio_max", runs.radial_diagnostics.ratio_max);
  v.at_most("linear3d/ratio_spread", runs.cartesian_diagnostics.ratio_spread, bound);
  v.report("linear3d/ratio_min", runs.cartesian_diagnostics.ratio_min);
  v.report("linear3d/ratio_max", runs.cartesian_diagnostics.ratio_max);
  return v;
}

Verdict check_dissipation_sign(const DecayRuns& runs, const VerifyContext&) {
  Verdict v{9, "dissipation_sign", {}};
  const auto min_dissipation = [](const RunDiagnostics& d) {
    double m = std::numeric_limits<double>::infinity();
    for (const NormReport& r : d.reports) m = std::min(m, r.dissipation);
    return m;
  };
  v.at_least(tag(runs.radial_params.gamma()) + "/min_dissipation", min_dissipation(runs.radial_diagnostics), 0.0);
  v.at_least(tag(runs.cartesian_params.gamma()) + "/min_dissipation", min_dissipation(runs.cartesian_diagnostics),
             0.0);
  const auto stiff = GammaParams::make(2.0, 1.0);
  const AffineTrajectory bg = conformal_background(stiff, 2.0);
  const double prefactor = dissipation_prefactor(stiff, derived_frame(stiff, bg.at_tau(1.0)));
  v.holds("gamma=2/prefactor_negative", prefactor < 0.0);
  v.report("gamma=2/prefactor", prefactor);
  return v;
}

Verdict check_functional_inequalities(const VerifyContext& ctx) {
  Verdict v{10, "hardy_embedding", {}};
  const Pins pin{ctx, v.name};
  const double tol = pin("refinement_change", 0.25);
  const auto change = [](double coarse, double fine) { return std::abs(fine / coarse - 1.0); };
  for (const HardyResult& h : hardy_check(default_hardy_family(), 256, tol)) {
    v.holds("hardy1d/" + h.name + "/finite", h.finite);
    v.at_most("hardy1d/" + h.name + "/refinement_change", change(h.constant_coarse, h.constant_fine), tol);
    v.report("hardy1d/" + h.name + "/constant", h.constant);
  }
  for (const double gamma : {1.4, 5.0 / 3.0}) {
    for (const EmbeddingResult& e : embedding_check(GammaParams::make(gamma, 1.0), default_embedding_family(), 24, 4,
                                                    tol)) {
      const std::string id = tag(gamma) + "/" + e.name;
      v.holds(id + "/finite", e.finite);
      v.at_most(id + "/hardy_refinement_change", change(e.hardy_coarse, e.hardy_fine), tol);
      v.at_most(id + "/embedding_refinement_change", change(e.embedding_coarse, e.embedding_fine), tol);
      v.report(id + "/embedding_constant", e.embedding_fine);
    }
  }
  note(ctx, "criterion 10 done");
  return v;
}

Verdict check_attractor(const DecayRuns& runs, const VerifyContext&) {
  Verdict v{11, "attractor", {}};
  v.holds("radial/monotone_ladder", runs.radial_attractor.monotone);
  v.report("radial/envelope_rate", runs.radial_attractor.envelope_rate);
  v.holds("linear3d/monotone_ladder", runs.cartesian_attractor.monotone);
  v.report("linear3d/envelope_rate", runs.cartesian_attractor.envelope_rate);
  return v;
}

std::vector<Verdict> run_criteria(const std::vector<int>& criteria, const VerifyContext& ctx,
                                  const DecayRunSpec& spec) {
  const std::set<int> wanted(criteria.begin(), criteria.end());
  for (const int c : wanted)
    if (c < 1 || c > kCriterionCount) throw ConfigError("unknown acceptance criterion " + std::to_string(c));
  std::shared_ptr<const DecayRuns> runs;
  const auto decay = [&]() -> const DecayRuns& {
    if (!runs) runs = run_decay_experiments(spec, ctx);
    return *runs;
  };
  std::vector<Verdict> out;
  for (const int c : wanted) {
    switch (c) {
      case 1: out.push_back(check_affine_exactness(ctx)); break;
      case 2: out.push_back(check_asymptotics(ctx)); break;
      case 3: out.push_back(check_algebraic_identities(ctx)); break;
      case 4: out.push_back(check_commutators(ctx)); break;
      case 5: out.push_back(check_euler_residuals(ctx)); break;
      case 6: out.push_back(check_steady_state(ctx)); break;
      case 7: out.push_back(check_decay_rates(decay(), ctx)); break;
      case 8: out.push_back(check_norm_energy(decay(), ctx)); break;
      case 9: out.push_back(check_dissipation_sign(decay(), ctx)); break;
      case 10: out.push_back(check_functional_inequalities(ctx)); break;
      case 11: out.push_back(check_attractor(decay(), ctx)); break;
    }
  }
  return out;
}

}  // namespace affinelab
