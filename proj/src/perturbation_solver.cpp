#include "affinelab/perturbation_solver.hpp"

#include "affinelab/fit.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <utility>

namespace affinelab {

void SolverConfig::validate() const {
  if (!(cfl > 0.0 && cfl < 1.0)) throw ConfigError("CFL number must lie in (0, 1), got " + std::to_string(cfl));
  if (!(tau_end > 0.0)) throw ConfigError("tau_end must be positive");
  if (!(output_every > 0.0)) throw ConfigError("output_every must be positive");
  if (max_steps < 0) throw ConfigError("max_steps must be nonnegative");
  if (!(blowup_factor > 1.0)) throw ConfigError("blowup_factor must exceed 1");
  if (!(min_step > 0.0)) throw ConfigError("min_step must be positive");
}

namespace {

double sup_abs(double v) { return std::abs(v); }
double sup_abs(const Vec3& v) { return v.cwiseAbs().maxCoeff(); }

template <class T>
void axpy(std::vector<T>& out, const std::vector<T>& x, double a, const std::vector<T>& y) {
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = x[n] + a * y[n];
}

template <class T>
bool all_finite(const std::vector<T>& f) {
  for (const T& v : f) {
    if constexpr (std::is_arithmetic_v<T>) {
      if (!std::isfinite(v)) return false;
    } else if (!v.allFinite()) {
      return false;
    }
  }
  return true;
}

DerivedFrame frame_at(const GammaParams& params, const AffineTrajectory& bg, double tau) {
  return derived_frame(params, bg.at_tau(tau));
}

// RK4 driver shared by both solvers. `rhs(tau, frame, theta, V, dV)` fills
// dV; theta_tau = V. `wave_speed(frame)` bounds the characteristic speed.
template <class Field, class Rhs, class WaveSpeed>
Run<Field> drive(const GammaParams& params, const AffineTrajectory& bg, double h, Field theta, Field V,
                 const SolverConfig& cfg, Rhs&& rhs, WaveSpeed&& wave_speed, const SnapshotObserver<Field>& observer,
                 const MonitorFunctional<Field>& monitor) {
  using T = typename Field::value_type;
  Run<Field> run;
  double tau = 0.0;
  DerivedFrame frame = frame_at(params, bg, tau);
  const auto check_speed = [&](const DerivedFrame& fr, double dt) { return wave_speed(fr) * dt / h <= cfg.cfl * (1.0 + 1e-12); };
  double dtau = cfg.cfl * h / wave_speed(frame);
  run.stats.dtau_initial = dtau;

  const auto emit = [&](bool final) {
    Snapshot<Field> snap{tau, theta, V, frame};
    if (monitor) {
      const double m = monitor(snap);
      if (run.snapshots.empty() && run.stats.steps == 0) run.stats.monitor_initial = m;
      run.stats.monitor_peak = std::max(run.stats.monitor_peak, m);
      const double m0 = run.stats.monitor_initial;
      if (params.gamma() <= 5.0 / 3.0 + 1e-12 && m0 > 0.0 && m > cfg.blowup_factor * m0) {
        std::ostringstream msg;
        msg << "instability detector: monitored energy grew from " << m0 << " to " << m << " (factor "
            << m / m0 << " > " << cfg.blowup_factor << ") at tau = " << tau;
        throw NumericalFailure(msg.str());
      }
    }
    if (observer) observer(snap);
    if (cfg.keep_snapshots || run.snapshots.empty() || final) run.snapshots.push_back(std::move(snap));
  };
  emit(false);

  Field k_th[4], k_v[4];
  Field th_stage = theta, v_stage = V;
  double next_out = cfg.output_every;
  const double eps = 1e-12 * std::max(1.0, cfg.tau_end);
  while (tau < cfg.tau_end - eps && (cfg.max_steps == 0 || run.stats.steps < cfg.max_steps)) {
    while (!check_speed(frame, dtau)) {
      dtau *= 0.5;
      if (dtau < cfg.min_step) {
        std::ostringstream msg;
        msg << "CFL step fell below the floor " << cfg.min_step << " at tau = " << tau;
        throw NumericalFailure(msg.str());
      }
    }
    const double dt = std::min({dtau, next_out - tau, cfg.tau_end - tau});
    const double stage_tau[4] = {tau, tau + 0.5 * dt, tau + 0.5 * dt, tau + dt};
    const double stage_weight[4] = {0.0, 0.5 * dt, 0.5 * dt, dt};
    for (int s = 0; s < 4; ++s) {
      if (s == 0) {
        th_stage = theta;
        v_stage = V;
      } else {
        axpy(th_stage, theta, stage_weight[s], k_th[s - 1]);
        axpy(v_stage, V, stage_weight[s], k_v[s - 1]);
      }
      const DerivedFrame fr = s == 0 ? frame : frame_at(params, bg, stage_tau[s]);
      k_th[s] = v_stage;
      rhs(fr, th_stage, v_stage, k_v[s]);
    }
    double increment = 0.0;
    for (std::size_t n = 0; n < theta.size(); ++n) {
      const T dth = (dt / 6.0) * (k_th[0][n] + 2.0 * k_th[1][n] + 2.0 * k_th[2][n] + k_th[3][n]);
      const T dv = (dt / 6.0) * (k_v[0][n] + 2.0 * k_v[1][n] + 2.0 * k_v[2][n] + k_v[3][n]);
      theta[n] += dth;
      V[n] += dv;
      increment = std::max({increment, sup_abs(dth), sup_abs(dv)});
    }
    if (!all_finite(theta) || !all_finite(V)) {
      std::ostringstream msg;
      msg << "non-finite perturbation state at tau = " << tau + dt;
      throw NumericalFailure(msg.str());
    }
    run.stats.max_increment = std::max(run.stats.max_increment, increment);
    tau += dt;
    ++run.stats.steps;
    frame = frame_at(params, bg, tau);
    const bool at_output = std::abs(tau - next_out) <= eps;
    if (at_output) next_out += cfg.output_every;
    const bool done = tau >= cfg.tau_end - eps || (cfg.max_steps > 0 && run.stats.steps >= cfg.max_steps);
    if (at_output || done) emit(done);
  }
  run.stats.dtau_final = dtau;
  return run;
}

void require_background(const AffineTrajectory& bg, const SolverConfig& cfg) {
  if (cfg.max_steps == 0 && cfg.tau_end > bg.tau_final() + 1e-12) {
    std::ostringstream msg;
    msg << "background trajectory ends at tau = " << bg.tau_final() << " before tau_end = " << cfg.tau_end;
    throw ConfigError(msg.str());
  }
}

// Pressure part of the radial force, divided by w^alpha, with J on faces.
class RadialPressure {
 public:
  RadialPressure(const GammaParams& params, const RadialGrid& grid) : params_(params), grid_(grid) {
    const int n = grid.cells;
    face_weight_.resize(n + 1);
    for (int f = 0; f <= n; ++f) face_weight_[f] = std::pow(enthalpy_weight(params, std::pow(f * grid.dr, 2)), 1.0 + params.alpha());
    inv_center_weight_.resize(n);
    // Cell average of w^alpha (3-point Gauss): consistent at the degenerate outer cell.
    static constexpr double kNode[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
    static constexpr double kWeight[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    for (int i = 0; i < n; ++i) {
      double avg = 0.0;
      for (int q = 0; q < 3; ++q) {
        const double r = grid.r[i] + 0.5 * grid.dr * kNode[q];
        avg += 0.5 * kWeight[q] * std::pow(enthalpy_weight(params, r * r), params.alpha());
      }
      inv_center_weight_[i] = 1.0 / avg;
    }
    flux_.resize(n + 1);
  }

  // Force_i = delta R_i + (R_i/r_i)^2 [-delta r_i + w_i^-alpha (F_{i+1/2} - F_{i-1/2}) / dr].
  void force(const ScalarField& th, ScalarField& out, double& min_jacobian) {
    const int n = grid_.cells;
    const double dr = grid_.dr;
    const double g = params_.gamma();
    const double delta = params_.delta();
    const auto flux = [&](int f, double J) {
      if (!(J > 0.0)) {
        std::ostringstream msg;
        msg << "radial flow map degenerates: J = " << J << " at r = " << f * dr;
        throw NumericalFailure(msg.str());
      }
      min_jacobian = std::min(min_jacobian, J);
      return face_weight_[f] * (std::pow(J, -g) - 1.0);
    };
    // Odd extension through r = 0: R_r(0) = 1 + 2 vartheta_0 / dr and J = R_r^3.
    flux_[0] = flux(0, std::pow(1.0 + 2.0 * th[0] / dr, 3));
    for (int f = 1; f < n; ++f) {
      const double rf = f * dr;
      const double Rf = rf + 0.5 * (th[f - 1] + th[f]);
      const double Rr = 1.0 + (th[f] - th[f - 1]) / dr;
      flux_[f] = flux(f, (Rf / rf) * (Rf / rf) * Rr);
    }
    flux_[n] = 0.0;
    for (int i = 0; i < n; ++i) {
      const double r = grid_.r[i];
      const double R = r + th[i];
      out[i] = delta * R + (R / r) * (R / r) * (-delta * r + inv_center_weight_[i] * (flux_[i + 1] - flux_[i]) / dr);
    }
  }

 private:
  const GammaParams& params_;
  const RadialGrid& grid_;
  ScalarField face_weight_;
  ScalarField inv_center_weight_;
  ScalarField flux_;
};

// Divergence-form elastic operator of the linearised 3D system.
class LinearElasticity {
 public:
  LinearElasticity(const GammaParams& params, const CartesianGrid& grid)
      : params_(params), grid_(grid), mass_(node_inertia_weights(grid)) {
    for (std::size_t n = 0; n < grid.size(); ++n) {
      if (!grid.active(n)) continue;
      active_.push_back(n);
      for (int k = 0; k < 3; ++k) {
        const std::ptrdiff_t p = grid.neighbor(n, k, 1);
        if (p < 0) continue;
        const Vec3 yf = 0.5 * (grid.node(n) + grid.node(static_cast<std::size_t>(p)));
        const double wf = enthalpy_weight(params, yf.squaredNorm());
        if (wf <= 0.0) continue;
        faces_.push_back({n, static_cast<std::size_t>(p), k, std::pow(wf, 1.0 + params.alpha())});
      }
    }
    acc_.assign(grid.size(), Vec3::Zero());
  }

  // out_n = sum_k d_k(w^(1+alpha) G_{.k}) / m_n with G_jk = d_j theta_k + delta_jk div theta / alpha.
  void divergence(const VectorField& th, VectorField& out) {
    const double h = grid_.h();
    const double inv_alpha = 1.0 / params_.alpha();
    const VectorField P[3] = {partial(grid_, th, 0), partial(grid_, th, 1), partial(grid_, th, 2)};
    std::fill(acc_.begin(), acc_.end(), Vec3::Zero());
    for (const Face& f : faces_) {
      const int k = f.axis;
      const Vec3 dk = (th[f.plus] - th[f.minus]) / h;  // compact normal derivative, components theta_i
      Vec3 dj_theta_k;                                  // d_j theta_k at the face, j = 0..2
      double div = dk(k);
      for (int j = 0; j < 3; ++j) {
        if (j == k) {
          dj_theta_k(j) = dk(k);
          continue;
        }
        dj_theta_k(j) = 0.5 * (P[j][f.minus](k) + P[j][f.plus](k));
        div += 0.5 * (P[j][f.minus](j) + P[j][f.plus](j));
      }
      Vec3 G = dj_theta_k;
      G(k) += div * inv_alpha;
      const Vec3 flux = (f.weight / h) * G;
      acc_[f.minus] += flux;
      acc_[f.plus] -= flux;
    }
    for (std::size_t n : active_) out[n] = acc_[n] / mass_[n];
  }

  const std::vector<std::size_t>& active() const { return active_; }

 private:
  struct Face {
    std::size_t minus;
    std::size_t plus;
    int axis;
    double weight;
  };
  const GammaParams& params_;
  const CartesianGrid& grid_;
  ScalarField mass_;
  std::vector<std::size_t> active_;
  std::vector<Face> faces_;
  VectorField acc_;
};

}  // namespace

RadialRun solve_radial(const GammaParams& params, std::shared_ptr<const AffineTrajectory> background,
                       const RadialGrid& grid, ScalarField theta0, ScalarField V0, const SolverConfig& cfg,
                       const SnapshotObserver<ScalarField>& observer, const MonitorFunctional<ScalarField>& monitor) {
  cfg.validate();
  if (!background) throw ConfigError("radial solver needs a background trajectory");
  require_background(*background, cfg);
  const std::size_t n = static_cast<std::size_t>(grid.cells);
  if (theta0.size() != n || V0.size() != n) throw ConfigError("radial initial data does not match the grid size");
  for (double tau : {0.0, std::min(cfg.tau_end, background->tau_final())}) {
    if ((frame_at(params, *background, tau).Lambda - Mat3::Identity()).norm() > 1e-8)
      throw ConfigError("radial reduction requires a conformal background (Lambda = Id)");
  }

  RadialPressure pressure(params, grid);
  double min_jacobian = std::numeric_limits<double>::infinity();
  const auto rhs = [&](const DerivedFrame& fr, const ScalarField& th, const ScalarField& v, ScalarField& dv) {
    dv.resize(n);
    pressure.force(th, dv, min_jacobian);
    const double inv_inertia = 1.0 / fr.inertia(params);
    for (std::size_t i = 0; i < n; ++i) dv[i] = -fr.mu_rate * v[i] - inv_inertia * dv[i];
  };
  const double w_max = params.enthalpy_scale();
  const auto wave_speed = [&](const DerivedFrame& fr) { return std::sqrt(params.gamma() * w_max / fr.inertia(params)); };
  const MonitorFunctional<ScalarField> mon =
      monitor ? monitor : [&](const RadialSnapshot& s) { return default_monitor(grid, params, s); };
  RadialRun run = drive(params, *background, grid.dr, std::move(theta0), std::move(V0), cfg, rhs, wave_speed, observer, mon);
  run.stats.min_jacobian = std::isfinite(min_jacobian) ? min_jacobian : 1.0;
  return run;
}

CartesianRun solve_linear3d(const GammaParams& params, std::shared_ptr<const AffineTrajectory> background,
                            const CartesianGrid& grid, VectorField theta0, VectorField V0, const SolverConfig& cfg,
                            const SnapshotObserver<VectorField>& observer,
                            const MonitorFunctional<VectorField>& monitor) {
  cfg.validate();
  if (!background) throw ConfigError("3D solver needs a background trajectory");
  require_background(*background, cfg);
  if (theta0.size() != grid.size() || V0.size() != grid.size())
    throw ConfigError("3D initial data does not match the grid size");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!grid.active(k)) {
      theta0[k].setZero();
      V0[k].setZero();
    }
  }

  LinearElasticity elastic(params, grid);
  VectorField div_flux(grid.size(), Vec3::Zero());
  const double delta = params.delta();
  const auto rhs = [&](const DerivedFrame& fr, const VectorField& th, const VectorField& v, VectorField& dv) {
    dv.assign(grid.size(), Vec3::Zero());
    elastic.divergence(th, div_flux);
    const double inv_inertia = 1.0 / fr.inertia(params);
    const Mat3 damping = fr.mu_rate * Mat3::Identity() + 2.0 * fr.GammaStar;
    for (std::size_t n : elastic.active()) {
      const Vec3 force = fr.Lambda * (div_flux[n] - delta * th[n]);
      dv[n] = -damping * v[n] + inv_inertia * force;
    }
  };
  const double w_max = params.enthalpy_scale();
  const auto wave_speed = [&](const DerivedFrame& fr) {
    return std::sqrt(params.gamma() * w_max * fr.eig.d.maxCoeff() / fr.inertia(params));
  };
  const MonitorFunctional<VectorField> mon =
      monitor ? monitor : [&](const CartesianSnapshot& s) { return default_monitor(grid, params, s); };
  return drive(params, *background, grid.h(), std::move(theta0), std::move(V0), cfg, rhs, wave_speed, observer, mon);
}

ScalarField node_inertia_weights(const CartesianGrid& grid) {
  static constexpr double kNode[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
  static constexpr double kWeight[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  const GammaParams& p = grid.params();
  const double half = 0.5 * grid.h();
  ScalarField out(grid.size(), 0.0);
  for (std::size_t n = 0; n < grid.size(); ++n) {
    if (!grid.active(n)) continue;
    double sum = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c) {
          const Vec3 y = grid.node(n) + half * Vec3(kNode[a], kNode[b], kNode[c]);
          sum += kWeight[a] * kWeight[b] * kWeight[c] * std::pow(enthalpy_weight(p, y.squaredNorm()), p.alpha());
        }
    out[n] = sum / 8.0;
  }
  return out;
}

namespace {

ScalarField radial_slope(const RadialGrid& grid, const ScalarField& f) {
  const int n = grid.cells;
  ScalarField out(n);
  for (int i = 0; i < n; ++i) {
    // Odd extension at r = 0; one-sided second order at the outer cell.
    const double left = i == 0 ? -f[0] : f[i - 1];
    out[i] = i + 1 < n ? (f[i + 1] - left) / (2.0 * grid.dr) : (3.0 * f[i] - 4.0 * f[i - 1] + f[i - 2]) / (2.0 * grid.dr);
  }
  return out;
}

}  // namespace

double default_monitor(const RadialGrid& grid, const GammaParams& params, const RadialSnapshot& snap) {
  const double inertia = snap.frame.inertia(params);
  const ScalarField slope = radial_slope(grid, snap.theta);
  ScalarField integrand(grid.cells);
  for (int i = 0; i < grid.cells; ++i) {
    const double wa = std::pow(grid.w[i], params.alpha());
    const double th = snap.theta[i];
    const double r = grid.r[i];
    integrand[i] = wa * (inertia * snap.V[i] * snap.V[i] + params.delta() * th * th) +
                   wa * grid.w[i] * (slope[i] * slope[i] + 2.0 * th * th / (r * r));
  }
  return grid.integrate(integrand);
}

double default_monitor(const CartesianGrid& grid, const GammaParams& params, const CartesianSnapshot& snap) {
  const double inertia = snap.frame.inertia(params);
  const MatrixField D = gradient(grid, snap.theta);
  ScalarField integrand(grid.size(), 0.0);
  for (std::size_t n = 0; n < grid.size(); ++n) {
    if (!grid.active(n)) continue;
    const double wa = std::pow(grid.w(n), params.alpha());
    integrand[n] = wa * (inertia * snap.V[n].squaredNorm() + params.delta() * snap.theta[n].squaredNorm()) +
                   wa * grid.w(n) * D[n].squaredNorm();
  }
  return grid.integrate(integrand);
}

double weighted_l2(const RadialGrid& grid, const ScalarField& f, double k) {
  ScalarField integrand(grid.cells);
  for (int i = 0; i < grid.cells; ++i) integrand[i] = std::pow(grid.w[i], k) * f[i] * f[i];
  return std::sqrt(grid.integrate(integrand));
}

double weighted_l2(const CartesianGrid& grid, const VectorField& f, double k) {
  ScalarField integrand(grid.size(), 0.0);
  for (std::size_t n = 0; n < grid.size(); ++n)
    if (grid.active(n)) integrand[n] = std::pow(grid.w(n), k) * f[n].squaredNorm();
  return std::sqrt(grid.integrate(integrand));
}

CartesianData polynomial_initial_data(const CartesianGrid& grid, double amplitude) {
  CartesianData out;
  out.theta = grid.sample<Vec3>([&](const Vec3& y) {
    const double b = std::pow(1.0 - y.squaredNorm(), 2);
    const Vec3 gradient_part(0.6 * y(0), 0.3 * y(1), -0.4 * y(2));
    const Vec3 rotation(-y(1), y(0), 0.0);
    const Vec3 shear(y(1) * y(2), 0.0, 0.0);
    return Vec3(amplitude * b * (gradient_part + 0.8 * rotation + 0.5 * shear));
  });
  out.V = grid.sample<Vec3>([&](const Vec3& y) {
    const double b = std::pow(1.0 - y.squaredNorm(), 2);
    return Vec3(amplitude * b * Vec3(0.2 * y(0) - 0.5 * y(1), 0.5 * y(0), 0.3 * y(2)));
  });
  return out;
}

VectorField embed_radial(const CartesianGrid& grid, const RadialGrid& radial, const ScalarField& profile) {
  const int m = radial.cells;
  const auto value_at = [&](double r) {
    const double x = r / radial.dr - 0.5;
    if (x <= 0.0) return profile[0] * r / radial.r[0];
    const int i = std::min(static_cast<int>(x), m - 2);
    const double t = x - i;
    return (1.0 - t) * profile[i] + t * profile[i + 1];
  };
  return grid.sample<Vec3>([&](const Vec3& y) {
    const double r = y.norm();
    return r > 0.0 ? Vec3(value_at(r) * y / r) : Vec3(Vec3::Zero());
  });
}

namespace {

template <class Grid, class Field>
AttractorReport attractor_ladder(const Grid& grid, const GammaParams& params, const std::vector<Snapshot<Field>>& series,
                                 double start, double ratio) {
  if (series.size() < 2 || series.back().tau - series.front().tau < 4.0)
    throw ConfigError("attractor estimate needs a series spanning at least 4 in tau");
  if (!(start > 0.0 && ratio > 1.0)) throw ConfigError("attractor ladder needs start > 0 and ratio > 1");
  const Field& limit = series.back().theta;
  const double tau_final = series.back().tau;
  AttractorReport rep;
  for (double tk = start; tk < tau_final - 1e-9; tk *= ratio) {
    const auto nearest = std::min_element(series.begin(), series.end(), [&](const auto& a, const auto& b) {
      return std::abs(a.tau - tk) < std::abs(b.tau - tk);
    });
    Field diff = nearest->theta;
    for (std::size_t n = 0; n < diff.size(); ++n) diff[n] -= limit[n];
    rep.ladder_tau.push_back(nearest->tau);
    rep.residual.push_back(weighted_l2(grid, diff, params.alpha()));
  }
  rep.monotone = true;
  for (std::size_t k = 0; k + 1 < rep.residual.size(); ++k)
    rep.monotone = rep.monotone && rep.residual[k + 1] <= rep.residual[k];
  const double mu1 = series.back().frame.mu_rate;
  const double mu0 = 1.5 * (params.gamma() - 1.0) * mu1;
  rep.predicted_rate = -1.5 * (params.gamma() - 1.0) * mu0;
  const bool positive = std::all_of(rep.residual.begin(), rep.residual.end(), [](double v) { return v > 0.0; });
  if (positive && rep.residual.size() >= 2)
    rep.envelope_rate = log_linear_fit(rep.ladder_tau, rep.residual, rep.ladder_tau.front(), rep.ladder_tau.back()).rate;
  return rep;
}

}  // namespace

AttractorReport attractor_estimate(const RadialGrid& grid, const GammaParams& params,
                                   const std::vector<RadialSnapshot>& series, double start, double ratio) {
  return attractor_ladder(grid, params, series, start, ratio);
}

AttractorReport attractor_estimate(const CartesianGrid& grid, const GammaParams& params,
                                   const std::vector<CartesianSnapshot>& series, double start, double ratio) {
  return attractor_ladder(grid, params, series, start, ratio);
}

void write_radial_csv(std::ostream& out, const RadialGrid& grid, const std::vector<RadialSnapshot>& series) {
  out << "tau,r,theta,V\n" << std::setprecision(17);
  for (const RadialSnapshot& s : series)
    for (int i = 0; i < grid.cells; ++i) out << s.tau << ',' << grid.r[i] << ',' << s.theta[i] << ',' << s.V[i] << '\n';
}

void write_cartesian_csv(std::ostream& out, const CartesianGrid& grid, const std::vector<CartesianSnapshot>& series) {
  out << "tau,x,y,z,theta1,theta2,theta3,V1,V2,V3\n" << std::setprecision(17);
  for (const CartesianSnapshot& s : series)
    for (std::size_t n = 0; n < grid.size(); ++n) {
      if (!grid.active(n)) continue;
      const Vec3& y = grid.node(n);
      out << s.tau << ',' << y(0) << ',' << y(1) << ',' << y(2) << ',' << s.theta[n](0) << ',' << s.theta[n](1) << ','
          << s.theta[n](2) << ',' << s.V[n](0) << ',' << s.V[n](1) << ',' << s.V[n](2) << '\n';
    }
}

}  // namespace affinelab
