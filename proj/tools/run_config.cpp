#include "run_config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace affinelab::cli {

using nlohmann::json;

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Affine: return "affine";
    case ExperimentKind::Fields: return "fields";
    case ExperimentKind::PerturbRadial: return "perturb-radial";
    case ExperimentKind::Perturb3d: return "perturb-3d";
    case ExperimentKind::Verify: return "verify";
  }
  return "verify";
}

ExperimentKind parse_kind(const std::string& text) {
  for (auto k : {ExperimentKind::Affine, ExperimentKind::Fields, ExperimentKind::PerturbRadial,
                 ExperimentKind::Perturb3d, ExperimentKind::Verify})
    if (to_string(k) == text) return k;
  throw ConfigError("experiment must be one of affine, fields, perturb-radial, perturb-3d, verify (got '" + text +
                    "')");
}

namespace {

std::string to_string(Profile p) {
  switch (p) {
    case Profile::Bump: return "bump";
    case Profile::Polynomial: return "polynomial";
    case Profile::Zero: return "zero";
  }
  return "bump";
}

Profile parse_profile(const std::string& text) {
  for (auto p : {Profile::Bump, Profile::Polynomial, Profile::Zero})
    if (to_string(p) == text) return p;
  throw ConfigError("perturbation.profile must be bump, polynomial or zero (got '" + text + "')");
}

// Reads the members of one JSON object; finish() rejects whatever was not read.
class ObjectReader {
 public:
  ObjectReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    const auto it = node_.find(key);
    if (it == node_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(qualified(key) + " has the wrong type");
    }
  }

  /// Nested object, or nullptr when absent.
  const json* child(const std::string& key) {
    seen_.insert(key);
    const auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown key '" + qualified(it.key()) + "'");
  }

 private:
  std::string where() const { return path_.empty() ? "configuration" : "'" + path_ + "'"; }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

int RunConfig::cells() const {
  if (grid_cells > 0) return grid_cells;
  return kind == ExperimentKind::Perturb3d ? 24 : 512;
}

std::vector<int> suite_criteria(const std::string& suite) {
  if (suite == "identities") return {1, 3, 4, 6};
  if (suite == "full") {
    std::vector<int> all;
    for (int c = 1; c <= kCriterionCount; ++c) all.push_back(c);
    return all;
  }
  throw ConfigError("verify.suite must be identities or full (got '" + suite + "')");
}

std::vector<int> RunConfig::selected_criteria() const {
  return criteria.empty() ? suite_criteria(suite) : criteria;
}

void RunConfig::validate() const {
  (void)params();  // gamma > 1, delta > 0
  require(from_row_major(A0).determinant() > 0.0, "physics.A0 must have positive determinant");
  for (double x : A0) require(std::isfinite(x), "physics.A0 entries must be finite");
  for (double x : A1) require(std::isfinite(x), "physics.A1 entries must be finite");
  require(finite_positive(affine_t_end), "affine.t_end must be positive");
  require(finite_positive(field_time), "fields.time must be positive");
  require(field_lattice >= 2 && field_lattice <= 256, "fields.lattice must lie in [2, 256]");
  require(residual_cells >= 8 && residual_cells <= 128, "fields.residual_cells must lie in [8, 128]");
  require(grid_cells == 0 || (grid_cells >= 8 && grid_cells <= 4096), "grid.cells must be 0 or lie in [8, 4096]");
  require(kind != ExperimentKind::Perturb3d || cells() <= 128, "grid.cells must not exceed 128 for perturb-3d");
  solver.validate();
  require(std::isfinite(amplitude), "perturbation.amplitude must be finite");
  for (int c : selected_criteria())
    require(c >= 1 && c <= kCriterionCount, "verify.criteria entries must lie in [1, 11]");
  require(decay.radial_cells >= 16 && decay.cartesian_cells >= 8, "verify grids are too coarse");
  require(finite_positive(decay.tau_end), "verify.tau_end must be positive");
  for (double g : sweep.gamma) (void)GammaParams::make(g, delta);
  for (double d : sweep.delta) (void)GammaParams::make(gamma, d);
  for (double a : sweep.amplitude) require(std::isfinite(a), "sweep.amplitude entries must be finite");
  require(sweep.workers >= 1, "sweep.workers must be at least 1");
  for (const auto& [key, value] : tolerances)
    require(std::isfinite(value) && value >= 0.0, "tolerance '" + key + "' must be a nonnegative number");
}

RunConfig parse_run_config(const json& doc) {
  RunConfig cfg;
  ObjectReader root(doc, "");
  std::string kind = to_string(cfg.kind);
  cfg.kind_given = doc.is_object() && doc.contains("experiment");
  root.get("experiment", kind);
  cfg.kind = parse_kind(kind);

  if (const json* node = root.child("physics")) {
    ObjectReader r(*node, "physics");
    r.get("gamma", cfg.gamma);
    r.get("delta", cfg.delta);
    r.get("A0", cfg.A0);
    r.get("A1", cfg.A1);
    r.finish();
  }
  if (const json* node = root.child("affine")) {
    ObjectReader r(*node, "affine");
    r.get("t_end", cfg.affine_t_end);
    r.finish();
  }
  if (const json* node = root.child("fields")) {
    ObjectReader r(*node, "fields");
    r.get("time", cfg.field_time);
    r.get("lattice", cfg.field_lattice);
    r.get("residual_cells", cfg.residual_cells);
    r.finish();
  }
  if (const json* node = root.child("grid")) {
    ObjectReader r(*node, "grid");
    r.get("cells", cfg.grid_cells);
    r.finish();
  }
  if (const json* node = root.child("solver")) {
    ObjectReader r(*node, "solver");
    r.get("cfl", cfg.solver.cfl);
    r.get("tau_end", cfg.solver.tau_end);
    r.get("output_every", cfg.solver.output_every);
    r.get("max_steps", cfg.solver.max_steps);
    r.get("blowup_factor", cfg.solver.blowup_factor);
    r.finish();
  }
  if (const json* node = root.child("perturbation")) {
    ObjectReader r(*node, "perturbation");
    std::string profile = to_string(cfg.profile);
    r.get("profile", profile);
    cfg.profile = parse_profile(profile);
    r.get("amplitude", cfg.amplitude);
    r.finish();
  }
  if (const json* node = root.child("verify")) {
    ObjectReader r(*node, "verify");
    r.get("suite", cfg.suite);
    r.get("criteria", cfg.criteria);
    r.get("radial_cells", cfg.decay.radial_cells);
    r.get("cartesian_cells", cfg.decay.cartesian_cells);
    r.get("tau_end", cfg.decay.tau_end);
    r.finish();
  }
  if (const json* node = root.child("sweep")) {
    ObjectReader r(*node, "sweep");
    r.get("gamma", cfg.sweep.gamma);
    r.get("delta", cfg.sweep.delta);
    r.get("amplitude", cfg.sweep.amplitude);
    r.get("workers", cfg.sweep.workers);
    r.finish();
  }
  std::string output = cfg.output.string();
  root.get("output", output);
  cfg.output = output;
  root.get("seed", cfg.seed);
  root.get("tolerances", cfg.tolerances);
  root.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("configuration file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_run_config(doc);
}

json to_json(const RunConfig& c) {
  return json{
      {"experiment", to_string(c.kind)},
      {"physics", {{"gamma", c.gamma}, {"delta", c.delta}, {"A0", c.A0}, {"A1", c.A1}}},
      {"affine", {{"t_end", c.affine_t_end}}},
      {"fields", {{"time", c.field_time}, {"lattice", c.field_lattice}, {"residual_cells", c.residual_cells}}},
      {"grid", {{"cells", c.cells()}}},
      {"solver",
       {{"cfl", c.solver.cfl},
        {"tau_end", c.solver.tau_end},
        {"output_every", c.solver.output_every},
        {"max_steps", c.solver.max_steps},
        {"blowup_factor", c.solver.blowup_factor}}},
      {"perturbation", {{"profile", to_string(c.profile)}, {"amplitude", c.amplitude}}},
      {"verify",
       {{"suite", c.suite},
        {"criteria", c.selected_criteria()},
        {"radial_cells", c.decay.radial_cells},
        {"cartesian_cells", c.decay.cartesian_cells},
        {"tau_end", c.decay.tau_end}}},
      {"sweep",
       {{"gamma", c.sweep.gamma},
        {"delta", c.sweep.delta},
        {"amplitude", c.sweep.amplitude},
        {"workers", c.sweep.workers}}},
      {"output", c.output.string()},
      {"seed", c.seed},
      {"tolerances", c.tolerances},
  };
}

}  // namespace affinelab::cli
