#include "runner.hpp"

#include "affinelab/affine_dynamics.hpp"
#include "affinelab/energy_diagnostics.hpp"
#include "affinelab/eulerian_fields.hpp"
#include "affinelab/fit.hpp"
#include "affinelab/perturbation_solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace affinelab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ofstream open_output(const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot write " + file.string());
  return out;
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

bool is_scalar_multiple_of_identity(const Mat3& M) {
  return (M - M(0, 0) * Mat3::Identity()).cwiseAbs().maxCoeff() == 0.0;
}

double asymptotic_expansion_rate(const GammaParams& params, const Mat3& A0, const Mat3& A1) {
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

double min_dissipation(const RunDiagnostics& d) {
  double m = std::numeric_limits<double>::infinity();
  for (const NormReport& r : d.reports) m = std::min(m, r.dissipation);
  return m;
}

double norm_growth(const RunDiagnostics& d) {
  double peak = 0.0;
  for (const NormReport& r : d.reports) peak = std::max(peak, r.norm);
  return peak / d.reports.front().norm;
}

// Background for the perturbation solvers, covering tau_end with a margin.
std::shared_ptr<const AffineTrajectory> perturbation_background(const RunConfig& cfg) {
  const GammaParams p = cfg.params();
  const Mat3 A0 = from_row_major(cfg.A0), A1 = from_row_major(cfg.A1);
  const double tau_end = cfg.solver.tau_end + 0.5;
  if (A0.isIdentity(0.0) && A1.isZero(0.0))
    return std::make_shared<const AffineTrajectory>(conformal_background(p, tau_end));
  return std::make_shared<const AffineTrajectory>(integrate_affine_to_tau(p, A0, A1, tau_end));
}

// Shared checks of a nonzero perturbation run.
void judge_perturbation(Verdict& v, const Tolerances& tol, const RunDiagnostics& diag, const StepStats& stats) {
  v.at_most("norm_growth", norm_growth(diag), tol.get(v.name, "norm_growth", 3.0));
  v.at_least("min_dissipation", min_dissipation(diag), 0.0);
  v.at_most("ratio_spread", diag.ratio_spread, tol.get(v.name, "ratio_spread", 50.0));
  v.report("steps", static_cast<double>(stats.steps));
  v.report("monitor_growth", stats.monitor_peak / stats.monitor_initial);
}

ExperimentResult affine_experiment(const RunConfig& cfg, const fs::path& dir, const VerifyContext& ctx) {
  ExperimentResult res;
  const GammaParams p = cfg.params();
  const Mat3 A0 = from_row_major(cfg.A0), A1 = from_row_major(cfg.A1);
  const AffineTrajectory traj = integrate_affine(p, A0, A1, cfg.affine_t_end);
  {
    std::ofstream out = open_output(dir / "trajectory.csv");
    write_trajectory_csv(out, traj);
    res.files.push_back({"trajectory.csv", "integrate_affine"});
  }
  Verdict v{0, "affine_run", {}};
  const double e0 = ode_energy(p, A0, A1);
  double drift = 0.0, min_det = std::numeric_limits<double>::infinity();
  for (const AffineState& s : traj.samples()) {
    drift = std::max(drift, std::abs(ode_energy(p, s.A, s.A_dot) - e0));
    min_det = std::min(min_det, s.A.determinant());
  }
  v.at_most("energy_drift_relative", drift / std::max(std::abs(e0), 1e-300),
            ctx.tolerances.get(v.name, "energy_drift_relative", 1e-8));
  v.at_least("min_det_A", min_det, 0.0);
  if (A0.isIdentity(0.0) && A1.isZero(0.0) && std::abs(p.gamma() - 5.0 / 3.0) < 1e-15 && p.delta() == 1.0) {
    const double t = cfg.affine_t_end;
    v.at_most("closed_form_relative_error", std::abs(traj.samples().back().A(0, 0) / std::sqrt(1.0 + t * t) - 1.0),
              ctx.tolerances.get(v.name, "closed_form_relative_error", 1e-8));
  }
  res.mu1 = asymptotic_expansion_rate(p, A0, A1);
  res.mu0 = 1.5 * (p.gamma() - 1.0) * res.mu1;
  v.report("mu1", res.mu1);
  v.report("mu0", res.mu0);
  v.report("mu0_over_mu1", res.mu0 / res.mu1);
  res.verdicts.push_back(std::move(v));
  return res;
}

ExperimentResult fields_experiment(const RunConfig& cfg, const fs::path& dir, const VerifyContext& ctx) {
  ExperimentResult res;
  const GammaParams p = cfg.params();
  const double t = cfg.field_time;
  auto traj = std::make_shared<const AffineTrajectory>(
      integrate_affine(p, from_row_major(cfg.A0), from_row_major(cfg.A1), 2.0 * t + 1.0));
  const FieldSampler field = affine_sampler(traj);
  const Mat3 A = traj->at_time(t).A;

  // Lattice over the bounding cube of the support, a little beyond it.
  const double R = 1.05 * Eigen::JacobiSVD<Mat3>(A).singularValues()(0);
  const int n = cfg.field_lattice;
  std::vector<Vec3> points;
  points.reserve(static_cast<std::size_t>(n) * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        points.emplace_back(-R + 2.0 * R * i / (n - 1), -R + 2.0 * R * j / (n - 1), -R + 2.0 * R * k / (n - 1));
  {
    std::ofstream out = open_output(dir / "fields.csv");
    write_field_csv(out, field, t, points);
    res.files.push_back({"fields.csv", "affine_sampler"});
  }

  Verdict v{0, "euler_fields", {}};
  ResidualDomain dom;
  dom.support_map = A;
  dom.cells = cfg.residual_cells;
  const ResidualConvergence conv = residual_convergence(field, p, Mat3::Identity(), dom, t);
  const double floor = ctx.tolerances.get(v.name, "order", 1.8);
  v.at_least("continuity_order", conv.continuity_order, floor);
  v.at_least("momentum_order", conv.momentum_order, floor);
  v.report("continuity_l2_fine", conv.fine.continuity_l2);
  v.report("momentum_l2_fine", conv.fine.momentum_l2);
  const double m0 = affine_mass(traj->at_time(0.0).A, p);
  v.at_most("mass_change_relative", std::abs(affine_mass(A, p) / m0 - 1.0),
            ctx.tolerances.get(v.name, "mass_change_relative", 1e-6));
  const SupportReport support = support_and_vacuum_checks(*traj, t);
  v.holds("physical_vacuum", support.physical_vacuum);
  v.report("support_radius", support.final_radius);
  res.verdicts.push_back(std::move(v));
  return res;
}

ExperimentResult radial_experiment(const RunConfig& cfg, const fs::path& dir, const VerifyContext& ctx) {
  const Mat3 A0 = from_row_major(cfg.A0), A1 = from_row_major(cfg.A1);
  if (!is_scalar_multiple_of_identity(A0) || !is_scalar_multiple_of_identity(A1))
    throw ConfigError("perturb-radial needs physics.A0 and physics.A1 to be multiples of the identity");
  if (cfg.profile == Profile::Polynomial)
    throw ConfigError("perturbation.profile polynomial is only available for perturb-3d");
  ExperimentResult res;
  const GammaParams p = cfg.params();
  const RadialGrid g(cfg.cells(), p);
  const bool zero = cfg.profile == Profile::Zero || cfg.amplitude == 0.0;
  const ScalarField theta0 = zero ? ScalarField(g.cells, 0.0) : radial_bump(g, cfg.amplitude);
  const RadialRun run =
      solve_radial(p, perturbation_background(cfg), g, theta0, ScalarField(g.cells, 0.0), cfg.solver, {},
                   [&](const RadialSnapshot& s) { return default_monitor(g, p, s); });
  {
    std::ofstream out = open_output(dir / "series.csv");
    write_radial_csv(out, g, run.snapshots);
    res.files.push_back({"series.csv", "solve_radial"});
  }
  res.mu1 = asymptotic_expansion_rate(p, A0, A1);
  res.mu0 = 1.5 * (p.gamma() - 1.0) * res.mu1;

  Verdict v{0, "radial_perturbation", {}};
  if (zero) {
    v.at_most("max_increment", run.stats.max_increment, ctx.tolerances.get(v.name, "max_increment", 1e-13));
    v.report("steps", static_cast<double>(run.stats.steps));
  } else {
    const RunDiagnostics diag = diagnose_run(g, p, run.snapshots);
    {
      std::ofstream out = open_output(dir / "norms.csv");
      write_norm_csv(out, diag.reports);
      res.files.push_back({"norms.csv", "radial_norm_report"});
    }
    judge_perturbation(v, ctx.tolerances, diag, run.stats);
    std::vector<double> tau, norm;
    for (const RadialSnapshot& s : run.snapshots) {
      tau.push_back(s.tau);
      norm.push_back(weighted_l2(g, s.V, p.alpha()));
    }
    if (tau.size() >= 4) {
      res.velocity_rate = decay_fit(tau, norm).rate;
      v.report("velocity_rate", res.velocity_rate);
    }
    v.report("mu0", res.mu0);
  }
  res.verdicts.push_back(std::move(v));
  return res;
}

ExperimentResult cartesian_experiment(const RunConfig& cfg, const fs::path& dir, const VerifyContext& ctx) {
  ExperimentResult res;
  const GammaParams p = cfg.params();
  const CartesianGrid g(cfg.cells(), p);
  const bool zero = cfg.profile == Profile::Zero || cfg.amplitude == 0.0;
  VectorField theta0(g.size(), Vec3::Zero()), V0(g.size(), Vec3::Zero());
  if (!zero && cfg.profile == Profile::Polynomial) {
    CartesianData data = polynomial_initial_data(g, cfg.amplitude);
    theta0 = std::move(data.theta);
    V0 = std::move(data.V);
  } else if (!zero) {
    const RadialGrid fine(4 * g.cells(), p);
    theta0 = embed_radial(g, fine, radial_bump(fine, cfg.amplitude));
  }
  const CartesianRun run = solve_linear3d(p, perturbation_background(cfg), g, theta0, V0, cfg.solver, {},
                                          [&](const CartesianSnapshot& s) { return default_monitor(g, p, s); });
  {
    // Full 3D series are large; the file holds the initial and final states.
    std::ofstream out = open_output(dir / "fields.csv");
    write_cartesian_csv(out, g, {run.snapshots.front(), run.snapshots.back()});
    res.files.push_back({"fields.csv", "solve_linear3d"});
  }
  res.mu1 = asymptotic_expansion_rate(p, from_row_major(cfg.A0), from_row_major(cfg.A1));
  res.mu0 = 1.5 * (p.gamma() - 1.0) * res.mu1;

  Verdict v{0, "linear3d_perturbation", {}};
  if (zero) {
    v.at_most("max_increment", run.stats.max_increment, ctx.tolerances.get(v.name, "max_increment", 1e-13));
    v.report("steps", static_cast<double>(run.stats.steps));
  } else {
    const RunDiagnostics diag = diagnose_run(g, p, run.snapshots, 0);
    {
      std::ofstream out = open_output(dir / "norms.csv");
      write_norm_csv(out, diag.reports);
      res.files.push_back({"norms.csv", "norm_report"});
    }
    judge_perturbation(v, ctx.tolerances, diag, run.stats);
    std::vector<double> tau, norm;
    for (const CartesianSnapshot& s : run.snapshots) {
      tau.push_back(s.tau);
      norm.push_back(weighted_l2(g, s.V, p.alpha()));
    }
    if (tau.size() >= 4) {
      res.velocity_rate = decay_fit(tau, norm).rate;
      v.report("velocity_rate", res.velocity_rate);
      const CurlTransportReport curl = curl_transport_check(g, p, run.snapshots);
      v.report("vorticity_rate", curl.vorticity_fit.rate);
      v.report("curl_transport_residual", curl.max_residual);
    }
    v.report("mu0", res.mu0);
  }
  res.verdicts.push_back(std::move(v));
  return res;
}

ExperimentResult verify_experiment(const RunConfig& cfg, const VerifyContext& ctx) {
  ExperimentResult res;
  res.verdicts = run_criteria(cfg.selected_criteria(), ctx, cfg.decay);
  return res;
}

VerifyContext context_for(const RunConfig& cfg, std::ostream* log, std::mutex* log_mutex) {
  VerifyContext ctx;
  ctx.seed = cfg.seed;
  ctx.tolerances = Tolerances(cfg.tolerances);
  if (log)
    ctx.log = [log, log_mutex](const std::string& line) {
      std::unique_lock<std::mutex> lock;
      if (log_mutex) lock = std::unique_lock<std::mutex>(*log_mutex);
      *log << "  " << line << '\n';
    };
  return ctx;
}

json verdict_json(const Verdict& v) {
  json parts = json::array();
  for (const CheckPart& p : v.parts)
    parts.push_back({{"name", p.name},
                     {"status", to_string(p.status)},
                     {"measured", p.timing ? json(nullptr) : number_or_null(p.measured)},
                     {"relation", p.relation},
                     {"target", number_or_null(p.target)},
                     {"tolerance", number_or_null(p.tolerance)}});
  json out{{"name", v.name}, {"status", to_string(v.status())}, {"parts", std::move(parts)}};
  if (v.criterion > 0) out["criterion"] = v.criterion;
  return out;
}

void write_json(const fs::path& file, const json& doc) {
  std::ofstream out = open_output(file);
  out << doc.dump(2) << '\n';
}

std::string csv_number(double x) {
  if (!std::isfinite(x)) return "";
  std::ostringstream s;
  s << std::setprecision(17) << x;
  return s.str();
}

// ---------------------------------------------------------------------------

struct SweepCell {
  double gamma = 0.0;
  double delta = 0.0;
  double amplitude = 0.0;
  std::string dir;
  std::string status;  // pass | fail | config-error | numerical-failure
  std::string message;
  ExperimentResult result;
};

std::vector<SweepCell> sweep_cells(const RunConfig& cfg) {
  if (cfg.sweep.gamma.empty() && cfg.sweep.delta.empty() && cfg.sweep.amplitude.empty())
    throw ConfigError("sweep grid is empty: give at least one of sweep.gamma, sweep.delta, sweep.amplitude");
  const auto axis = [](const std::vector<double>& values, double base) {
    return values.empty() ? std::vector<double>{base} : values;
  };
  std::vector<SweepCell> cells;
  for (double g : axis(cfg.sweep.gamma, cfg.gamma))
    for (double d : axis(cfg.sweep.delta, cfg.delta))
      for (double a : axis(cfg.sweep.amplitude, cfg.amplitude)) {
        SweepCell c;
        c.gamma = g;
        c.delta = d;
        c.amplitude = a;
        std::ostringstream name;
        name << "cell_" << std::setw(3) << std::setfill('0') << cells.size();
        c.dir = name.str();
        cells.push_back(std::move(c));
      }
  return cells;
}

void run_cell(const RunConfig& base, SweepCell& cell, const fs::path& root, std::ostream& log, std::mutex& log_mutex) {
  RunConfig cfg = base;
  cfg.gamma = cell.gamma;
  cfg.delta = cell.delta;
  cfg.amplitude = cell.amplitude;
  const fs::path dir = root / cell.dir;
  try {
    cfg.validate();
    fs::create_directories(dir);
    write_json(dir / "config.json", to_json(cfg));
    cell.result = run_experiment(cfg, dir, context_for(cfg, nullptr, nullptr));
    cell.status = verdict_exit_code(cell.result.verdicts) == kExitPass ? "pass" : "fail";
  } catch (const ConfigError& e) {
    cell.status = "config-error";
    cell.message = e.what();
  } catch (const NumericalFailure& e) {
    cell.status = "numerical-failure";
    cell.message = e.what();
  }
  std::lock_guard<std::mutex> lock(log_mutex);
  log << cell.dir << ": gamma " << cell.gamma << " delta " << cell.delta << " amplitude " << cell.amplitude << " -> "
      << cell.status << (cell.message.empty() ? "" : " (" + cell.message + ")") << '\n';
}

int run_sweep(const RunConfig& cfg, int workers, const fs::path& root, std::vector<Artifact>& files,
              std::ostream& log) {
  if (cfg.kind == ExperimentKind::Verify) throw ConfigError("sweep needs an experiment other than verify");
  std::vector<SweepCell> cells = sweep_cells(cfg);
  std::mutex log_mutex;
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t k = next++; k < cells.size(); k = next++) run_cell(cfg, cells[k], root, log, log_mutex);
  };
  {
    std::vector<std::jthread> pool;
    const int count = std::min<int>(workers, static_cast<int>(cells.size()));
    for (int w = 1; w < count; ++w) pool.emplace_back(worker);
    worker();
  }

  // Written in cell order, independent of scheduling.
  int exit = kExitPass;
  std::ofstream summary = open_output(root / "summary.csv");
  summary << "cell,gamma,delta,amplitude,mu1,mu0,mu0_over_mu1,velocity_rate,status,message\n";
  for (const SweepCell& c : cells) {
    const ExperimentResult& r = c.result;
    std::string message = c.message;
    std::replace(message.begin(), message.end(), ',', ';');
    summary << c.dir << ',' << csv_number(c.gamma) << ',' << csv_number(c.delta) << ',' << csv_number(c.amplitude)
            << ',' << csv_number(r.mu1) << ',' << csv_number(r.mu0) << ',' << csv_number(r.mu0 / r.mu1) << ','
            << csv_number(r.velocity_rate) << ',' << c.status << ',' << message << '\n';
    if (c.status != "pass") exit = kExitCheckFailure;
    if (c.status == "config-error" || c.status == "numerical-failure") continue;
    files.push_back({c.dir + "/config.json", "sweep"});
    for (const Artifact& a : r.files) files.push_back({c.dir + "/" + a.path, a.operation});
    files.push_back({c.dir + "/verdicts.json", "sweep"});
  }
  files.push_back({"summary.csv", "sweep"});
  return exit;
}

ExperimentKind kind_for(Command command, const RunConfig& cfg) {
  const auto mismatch = [&](const std::string& expected) {
    return ConfigError("configuration experiment '" + to_string(cfg.kind) + "' does not match the " + expected +
                       " subcommand");
  };
  switch (command) {
    case Command::Affine:
      if (cfg.kind_given && cfg.kind != ExperimentKind::Affine) throw mismatch("affine");
      return ExperimentKind::Affine;
    case Command::Fields:
      if (cfg.kind_given && cfg.kind != ExperimentKind::Fields) throw mismatch("fields");
      return ExperimentKind::Fields;
    case Command::Perturb:
      if (!cfg.kind_given) return ExperimentKind::PerturbRadial;
      if (cfg.kind != ExperimentKind::PerturbRadial && cfg.kind != ExperimentKind::Perturb3d) throw mismatch("perturb");
      return cfg.kind;
    case Command::Verify:
      if (cfg.kind_given && cfg.kind != ExperimentKind::Verify) throw mismatch("verify");
      return ExperimentKind::Verify;
    case Command::Sweep:
      return cfg.kind_given ? cfg.kind : ExperimentKind::PerturbRadial;
  }
  return ExperimentKind::Verify;
}

std::string command_name(Command c) {
  switch (c) {
    case Command::Affine: return "affine";
    case Command::Fields: return "fields";
    case Command::Perturb: return "perturb";
    case Command::Verify: return "verify";
    case Command::Sweep: return "sweep";
  }
  return "verify";
}

}  // namespace

ExperimentResult run_experiment(const RunConfig& config, const fs::path& dir, const VerifyContext& ctx) {
  fs::create_directories(dir);
  ExperimentResult res;
  switch (config.kind) {
    case ExperimentKind::Affine: res = affine_experiment(config, dir, ctx); break;
    case ExperimentKind::Fields: res = fields_experiment(config, dir, ctx); break;
    case ExperimentKind::PerturbRadial: res = radial_experiment(config, dir, ctx); break;
    case ExperimentKind::Perturb3d: res = cartesian_experiment(config, dir, ctx); break;
    case ExperimentKind::Verify: res = verify_experiment(config, ctx); break;
  }
  write_verdicts(dir / "verdicts.json", res.verdicts);
  return res;
}

int verdict_exit_code(const std::vector<Verdict>& verdicts) {
  for (const Verdict& v : verdicts)
    if (!v.passed()) return kExitCheckFailure;
  return kExitPass;
}

void write_verdicts(const fs::path& file, const std::vector<Verdict>& verdicts) {
  json list = json::array();
  for (const Verdict& v : verdicts) list.push_back(verdict_json(v));
  write_json(file, {{"schema_version", kVerdictSchema},
                    {"status", verdict_exit_code(verdicts) == kExitPass ? "pass" : "fail"},
                    {"verdicts", std::move(list)}});
}

int resolve_workers(const RunConfig& config, std::optional<int> flag) {
  if (flag) {
    if (*flag < 1) throw ConfigError("--workers must be at least 1");
    return *flag;
  }
  if (const char* env = std::getenv("AFFINELAB_WORKERS"); env && *env) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n < 1 || n > 1024) throw ConfigError("AFFINELAB_WORKERS must be an integer in [1, 1024]");
    return static_cast<int>(n);
  }
  return config.sweep.workers;
}

int execute(const Invocation& inv, std::ostream& log) {
  fs::path out;
  json manifest{{"schema_version", kManifestSchema}, {"command", command_name(inv.command)}};
  std::vector<Artifact> files;
  int exit = kExitPass;
  bool out_ready = false;
  try {
    RunConfig cfg = inv.config ? load_run_config(*inv.config) : RunConfig{};
    cfg.kind = kind_for(inv.command, cfg);
    if (inv.out) cfg.output = *inv.out;
    if (inv.seed) cfg.seed = *inv.seed;
    if (inv.command == Command::Sweep) cfg.sweep.workers = resolve_workers(cfg, inv.workers);
    cfg.validate();
    out = cfg.output;
    fs::create_directories(out);
    out_ready = true;
    manifest["experiment"] = to_string(cfg.kind);
    manifest["seed"] = cfg.seed;
    manifest["config"] = to_json(cfg);

    if (inv.command == Command::Sweep) {
      exit = run_sweep(cfg, cfg.sweep.workers, out, files, log);
    } else {
      std::mutex log_mutex;
      const ExperimentResult res = run_experiment(cfg, out, context_for(cfg, &log, &log_mutex));
      files = res.files;
      files.push_back({"verdicts.json", to_string(cfg.kind)});
      for (const Verdict& v : res.verdicts) {
        log << (v.criterion > 0 ? "criterion " + std::to_string(v.criterion) + " " : std::string()) << v.name << ": "
            << to_string(v.status()) << '\n';
        for (const CheckPart& p : v.parts)
          if (p.status == CheckStatus::Fail)
            log << "    failed " << p.name << ": measured " << p.measured << ' ' << p.relation << ' ' << p.target
                << '\n';
      }
      exit = verdict_exit_code(res.verdicts);
    }
  } catch (const ConfigError& e) {
    log << "configuration error: " << e.what() << '\n';
    exit = kExitConfigError;
    manifest["error"] = e.what();
  } catch (const NumericalFailure& e) {
    log << "numerical failure: " << e.what() << '\n';
    exit = kExitNumericalFailure;
    manifest["error"] = e.what();
  } catch (const fs::filesystem_error& e) {
    log << "configuration error: " << e.what() << '\n';
    exit = kExitConfigError;
    manifest["error"] = e.what();
  }
  if (!out_ready) return exit;
  json list = json::array();
  for (const Artifact& a : files) list.push_back({{"path", a.path}, {"operation", a.operation}});
  manifest["files"] = std::move(list);
  manifest["exit_code"] = exit;
  try {
    write_json(out / "manifest.json", manifest);
  } catch (const ConfigError& e) {
    log << "configuration error: " << e.what() << '\n';
    return kExitConfigError;
  }
  return exit;
}

}  // namespace affinelab::cli
