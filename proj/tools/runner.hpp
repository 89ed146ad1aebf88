// Orchestration behind the command-line front end: one experiment per run,
// sweeps over (gamma, delta, amplitude) on a worker pool, and the files every
// run leaves behind (CSV series, verdicts.json, manifest.json).
#pragma once

#include "run_config.hpp"

#include "affinelab/verification.hpp"

#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace affinelab::cli {

inline constexpr const char* kManifestSchema = "affinelab-manifest/1";
inline constexpr const char* kVerdictSchema = "affinelab-verdicts/1";

/// Process exit codes.
enum ExitCode : int { kExitPass = 0, kExitCheckFailure = 1, kExitConfigError = 2, kExitNumericalFailure = 3 };

/// A file written by a run and the operation whose numbers it holds. Paths
/// are relative to the run's output directory.
struct Artifact {
  std::string path;
  std::string operation;
};

struct ExperimentResult {
  std::vector<Verdict> verdicts;
  std::vector<Artifact> files;
  double mu1 = std::numeric_limits<double>::quiet_NaN();
  double mu0 = std::numeric_limits<double>::quiet_NaN();
  double velocity_rate = std::numeric_limits<double>::quiet_NaN();
};

/// Runs `config.kind` and writes its CSV series and verdicts.json into `dir`
/// (created if missing). Throws ConfigError / NumericalFailure.
ExperimentResult run_experiment(const RunConfig& config, const std::filesystem::path& dir, const VerifyContext& ctx);

/// 0 when no pass/fail part failed, 1 otherwise.
int verdict_exit_code(const std::vector<Verdict>& verdicts);

/// verdicts.json; wall-clock measurements are written as null so that
/// identical runs give identical files.
void write_verdicts(const std::filesystem::path& file, const std::vector<Verdict>& verdicts);

enum class Command { Affine, Fields, Perturb, Verify, Sweep };

struct Invocation {
  Command command = Command::Verify;
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

/// Worker count: the --workers flag, else AFFINELAB_WORKERS, else the config.
int resolve_workers(const RunConfig& config, std::optional<int> flag);

/// Loads the configuration, applies the flags, runs, writes manifest.json and
/// returns the exit code. Messages go to `log`.
int execute(const Invocation& invocation, std::ostream& log);

}  // namespace affinelab::cli
