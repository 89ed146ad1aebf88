// Acceptance checks: one named verdict per criterion, each built from
// pass/fail and report-only parts with the measured value, the target and the
// tolerance it was judged against.
#pragma once

#include "affinelab/core.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace affinelab {

enum class CheckStatus { Pass, Fail, ReportOnly };

std::string to_string(CheckStatus status);

/// One judged quantity. `relation` is how measured is compared with target
/// ("<=", ">=", "~rel" for |measured/target - 1| <= tolerance, "==" for a
/// boolean, "report"). Wall-clock parts are flagged `timing` so writers can
/// keep result files reproducible.
struct CheckPart {
  std::string name;
  CheckStatus status = CheckStatus::ReportOnly;
  double measured = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  std::string relation = "report";
  bool timing = false;
};

struct Verdict {
  int criterion = 0;  // 0 for checks outside the acceptance list
  std::string name;
  std::vector<CheckPart> parts;

  /// Fail if any pass/fail part failed, ReportOnly if there is none.
  CheckStatus status() const;
  bool passed() const { return status() != CheckStatus::Fail; }

  CheckPart& at_most(std::string part, double measured, double bound);
  CheckPart& at_least(std::string part, double measured, double bound);
  CheckPart& relative(std::string part, double measured, double target, double tolerance);
  CheckPart& holds(std::string part, bool value);
  CheckPart& report(std::string part, double measured);
  CheckPart& runtime(std::string part, double seconds, double budget);
};

/// Per-part tolerance overrides keyed by "<verdict name>/<part name>" or by
/// the bare part name; the pinned default applies otherwise.
class Tolerances {
 public:
  Tolerances() = default;
  explicit Tolerances(std::map<std::string, double> overrides) : overrides_(std::move(overrides)) {}

  double get(const std::string& verdict, const std::string& part, double fallback) const;
  const std::map<std::string, double>& overrides() const { return overrides_; }

 private:
  std::map<std::string, double> overrides_;
};

struct VerifyContext {
  std::uint64_t seed = 20240611;
  Tolerances tolerances;
  /// Optional progress sink, one line per finished stage.
  std::function<void(const std::string&)> log;
};

/// Resolution and horizon of the decay runs shared by criteria 7, 8, 9, 11.
struct DecayRunSpec {
  int radial_cells = 2048;
  int cartesian_cells = 48;
  double tau_end = 8.0;
  double amplitude = 1e-3;
  double radial_output_every = 0.05;
  double cartesian_output_every = 0.1;
};

/// Both decay runs and everything derived from them. Built once, shared.
struct DecayRuns;
std::shared_ptr<const DecayRuns> run_decay_experiments(const DecayRunSpec& spec, const VerifyContext& ctx);

Verdict check_affine_exactness(const VerifyContext& ctx);           // 1
Verdict check_asymptotics(const VerifyContext& ctx);                // 2
Verdict check_algebraic_identities(const VerifyContext& ctx);       // 3
Verdict check_commutators(const VerifyContext& ctx);                // 4
Verdict check_euler_residuals(const VerifyContext& ctx);            // 5
Verdict check_steady_state(const VerifyContext& ctx);               // 6
Verdict check_decay_rates(const DecayRuns& runs, const VerifyContext& ctx);        // 7
Verdict check_norm_energy(const DecayRuns& runs, const VerifyContext& ctx);        // 8
Verdict check_dissipation_sign(const DecayRuns& runs, const VerifyContext& ctx);   // 9
Verdict check_functional_inequalities(const VerifyContext& ctx);    // 10
Verdict check_attractor(const DecayRuns& runs, const VerifyContext& ctx);          // 11

inline constexpr int kCriterionCount = 11;

/// Criteria in ascending order; the decay runs are built only when one of
/// 7, 8, 9, 11 is requested. Throws ConfigError on an unknown number.
std::vector<Verdict> run_criteria(const std::vector<int>& criteria, const VerifyContext& ctx,
                                  const DecayRunSpec& spec = {});

}  // namespace affinelab
