// Run configuration for the command-line front end. Read from JSON; every
// object rejects keys it does not know, and physical invariants are checked
// before anything is computed.
//
// {
//   "experiment": "perturb-radial",   // affine | fields | perturb-radial | perturb-3d | verify
//   "physics": {"gamma": 1.6667, "delta": 1.0,
//               "A0": [9 numbers, row-major], "A1": [9 numbers]},
//   "affine": {"t_end": 10.0},
//   "fields": {"time": 1.0, "lattice": 9, "residual_cells": 32},
//   "grid": {"cells": 256},            // radial cells or 3D cells per side
//   "solver": {"cfl": 0.4, "tau_end": 8.0, "output_every": 0.05,
//              "max_steps": 0, "blowup_factor": 10.0},
//   "perturbation": {"profile": "bump", "amplitude": 1e-3},   // bump | polynomial | zero
//   "verify": {"suite": "identities", "criteria": [1, 3],
//              "radial_cells": 2048, "cartesian_cells": 48, "tau_end": 8.0},
//   "sweep": {"gamma": [1.4, 1.6667], "delta": [1.0], "amplitude": [1e-3], "workers": 2},
//   "output": "affinelab-out",
//   "seed": 20240611,
//   "tolerances": {"decay_rates/radial/velocity_rate": 0.15}
// }
#pragma once

#include "affinelab/core.hpp"
#include "affinelab/perturbation_solver.hpp"
#include "affinelab/verification.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace affinelab::cli {

enum class ExperimentKind { Affine, Fields, PerturbRadial, Perturb3d, Verify };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_kind(const std::string& text);

enum class Profile { Bump, Polynomial, Zero };

struct SweepAxes {
  std::vector<double> gamma;
  std::vector<double> delta;
  std::vector<double> amplitude;
  int workers = 1;
};

struct RunConfig {
  ExperimentKind kind = ExperimentKind::Verify;
  bool kind_given = false;  // "experiment" present in the file
  double gamma = 5.0 / 3.0;
  double delta = 1.0;
  std::array<double, 9> A0{1, 0, 0, 0, 1, 0, 0, 0, 1};
  std::array<double, 9> A1{1, 0, 0, 0, 1, 0, 0, 0, 1};

  double affine_t_end = 10.0;

  double field_time = 1.0;
  int field_lattice = 9;
  int residual_cells = 32;

  int grid_cells = 0;  // 0: 512 radial cells, 24 per side in 3D
  SolverConfig solver;

  Profile profile = Profile::Bump;
  double amplitude = 1e-3;

  std::string suite = "identities";
  std::vector<int> criteria;  // overrides the suite when nonempty
  DecayRunSpec decay;

  SweepAxes sweep;

  std::filesystem::path output = "affinelab-out";
  std::uint64_t seed = 20240611;
  std::map<std::string, double> tolerances;

  GammaParams params() const { return GammaParams::make(gamma, delta); }
  int cells() const;
  /// Criteria to run: the explicit list, or the suite's.
  std::vector<int> selected_criteria() const;

  /// Throws ConfigError naming the first violated invariant.
  void validate() const;
};

/// Parses and validates; unknown keys and ill-typed values are ConfigError.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

/// Normalised form with every field spelled out, as recorded in manifests.
nlohmann::json to_json(const RunConfig& config);

/// Suites: "identities" (1, 3, 4, 6; closed-form and algebraic checks that
/// finish in seconds) and "full" (1 to 11).
std::vector<int> suite_criteria(const std::string& suite);

}  // namespace affinelab::cli
