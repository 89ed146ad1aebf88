#include <doctest.h>

#include "runner.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace affinelab;
using namespace affinelab::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Fresh scratch directory under the system temp path, removed on exit.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& name) : path_(fs::temp_directory_path() / ("affinelab_test_" + name)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() { fs::remove_all(path_); }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const fs::path& path() const { return path_; }

  fs::path write(const std::string& file, const json& doc) const {
    std::ofstream(path_ / file) << doc.dump();
    return path_ / file;
  }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& file) {
  std::ifstream in(file);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json read_json(const fs::path& file) { return json::parse(slurp(file)); }

int run(Command command, const fs::path& config, const fs::path& out, std::string* log_text = nullptr) {
  Invocation inv;
  inv.command = command;
  inv.config = config;
  inv.out = out;
  std::ostringstream log;
  const int code = execute(inv, log);
  if (log_text) *log_text = log.str();
  return code;
}

const json kStill = {0, 0, 0, 0, 0, 0, 0, 0, 0};

}  // namespace

TEST_CASE("defaults are the closed-form corner") {
  const RunConfig cfg = parse_run_config(json::object());
  CHECK(cfg.gamma == doctest::Approx(5.0 / 3.0));
  CHECK(cfg.delta == 1.0);
  CHECK(from_row_major(cfg.A0).isIdentity(0.0));
  CHECK(from_row_major(cfg.A1).isIdentity(0.0));
  CHECK(cfg.kind == ExperimentKind::Verify);
  CHECK_FALSE(cfg.kind_given);
  CHECK(cfg.selected_criteria() == std::vector<int>{1, 3, 4, 6});
}

TEST_CASE("configuration invariants and unknown keys") {
  CHECK_THROWS_WITH_AS(parse_run_config({{"physics", {{"delta", -1.0}}}}), doctest::Contains("delta"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config({{"physics", {{"gamma", 0.9}}}}), doctest::Contains("gamma"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config({{"physics", {{"A0", {1, 0, 0, 0, 1, 0, 0, 0, -1}}}}}),
                       doctest::Contains("determinant"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config({{"solver", {{"cfl", 0.4}, {"cfll", 1}}}}),
                       doctest::Contains("solver.cfll"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config({{"colour", "red"}}), doctest::Contains("colour"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config({{"grid", {{"cells", "many"}}}}), doctest::Contains("grid.cells"),
                       ConfigError);
  CHECK_THROWS_AS(parse_run_config({{"experiment", "simulate"}}), ConfigError);
  CHECK_THROWS_AS(parse_run_config({{"verify", {{"criteria", {0}}}}}), ConfigError);
  CHECK_THROWS_AS(parse_run_config({{"verify", {{"suite", "most"}}}}), ConfigError);
  CHECK_THROWS_AS(parse_run_config({{"physics", {{"A1", {1, 2, 3}}}}}), ConfigError);
  CHECK_THROWS_AS(parse_run_config(json::array()), ConfigError);
}

TEST_CASE("normalised configuration round-trips") {
  const RunConfig cfg = parse_run_config({{"experiment", "perturb-3d"}, {"seed", 7}, {"sweep", {{"gamma", {1.4}}}}});
  json doc = to_json(cfg);
  const RunConfig again = parse_run_config(doc);
  CHECK(to_json(again) == doc);
  CHECK(again.cells() == 24);
  CHECK(again.seed == 7);
}

TEST_CASE("verify on defaults passes and leaves a manifest") {
  ScratchDir dir("verify");
  const fs::path cfg = dir.write("verify.json", {{"verify", {{"criteria", {1, 3}}}}});
  REQUIRE(run(Command::Verify, cfg, dir.path() / "out") == kExitPass);
  const json manifest = read_json(dir.path() / "out" / "manifest.json");
  CHECK(manifest["schema_version"] == kManifestSchema);
  CHECK(manifest["exit_code"] == 0);
  CHECK(manifest["files"].size() == 1);
  const json verdicts = read_json(dir.path() / "out" / "verdicts.json");
  CHECK(verdicts["schema_version"] == kVerdictSchema);
  REQUIRE(verdicts["verdicts"].size() == 2);
  CHECK(verdicts["verdicts"][0]["criterion"] == 1);
  for (const json& part : verdicts["verdicts"][0]["parts"])
    if (part["name"] == "runtime_s") CHECK(part["measured"].is_null());
}

TEST_CASE("negative delta exits with a configuration error naming the invariant") {
  ScratchDir dir("delta");
  const fs::path cfg = dir.write("bad.json", {{"physics", {{"delta", -1.0}}}});
  std::string log;
  CHECK(run(Command::Verify, cfg, dir.path() / "out", &log) == kExitConfigError);
  CHECK(log.find("delta must be positive") != std::string::npos);
  CHECK_FALSE(fs::exists(dir.path() / "out"));
}

TEST_CASE("experiment kind must match the subcommand") {
  ScratchDir dir("kind");
  const fs::path cfg = dir.write("c.json", {{"experiment", "affine"}});
  CHECK(run(Command::Verify, cfg, dir.path() / "out") == kExitConfigError);
  CHECK(run(Command::Perturb, cfg, dir.path() / "out") == kExitConfigError);
}

TEST_CASE("failed checks exit with 1") {
  ScratchDir dir("fail");
  const fs::path cfg =
      dir.write("c.json", {{"verify", {{"criteria", {1}}}},
                           {"tolerances", {{"affine_ode_exactness/a(10)_relative_error", 1e-17}}}});
  CHECK(run(Command::Verify, cfg, dir.path() / "out") == kExitCheckFailure);
  CHECK(read_json(dir.path() / "out" / "verdicts.json")["status"] == "fail");
}

TEST_CASE("radial perturbation with zero data is a steady state") {
  ScratchDir dir("zero");
  const fs::path cfg = dir.write("z.json", {{"experiment", "perturb-radial"},
                                            {"physics", {{"A1", kStill}}},
                                            {"perturbation", {{"profile", "zero"}}},
                                            {"grid", {{"cells", 64}}},
                                            {"solver", {{"tau_end", 2.0}}}});
  REQUIRE(run(Command::Perturb, cfg, dir.path() / "out") == kExitPass);
  const json verdicts = read_json(dir.path() / "out" / "verdicts.json");
  CHECK(verdicts["verdicts"][0]["parts"][0]["name"] == "max_increment");
  CHECK(verdicts["verdicts"][0]["parts"][0]["status"] == "pass");
  CHECK(fs::exists(dir.path() / "out" / "series.csv"));
}

TEST_CASE("radial perturbation rejects an anisotropic background") {
  ScratchDir dir("aniso");
  const fs::path cfg = dir.write("c.json", {{"physics", {{"A0", {1.2, 0, 0, 0, 1, 0, 0, 0, 0.9}}}}});
  CHECK(run(Command::Perturb, cfg, dir.path() / "out") == kExitConfigError);
}

TEST_CASE("a degenerate flow map exits with a numerical failure") {
  ScratchDir dir("degenerate");
  const fs::path cfg = dir.write("c.json", {{"physics", {{"A1", kStill}}},
                                            {"perturbation", {{"amplitude", -5.0}}},
                                            {"grid", {{"cells", 64}}},
                                            {"solver", {{"tau_end", 1.0}}}});
  std::string log;
  CHECK(run(Command::Perturb, cfg, dir.path() / "out", &log) == kExitNumericalFailure);
  CHECK(log.find("degenerate") != std::string::npos);
  CHECK(read_json(dir.path() / "out" / "manifest.json")["exit_code"] == kExitNumericalFailure);
}

TEST_CASE("small runs of every experiment kind") {
  ScratchDir dir("kinds");
  CHECK(run(Command::Affine, dir.write("a.json", {{"affine", {{"t_end", 5.0}}}}), dir.path() / "a") == kExitPass);
  CHECK(fs::exists(dir.path() / "a" / "trajectory.csv"));
  CHECK(run(Command::Fields, dir.write("f.json", {{"fields", {{"lattice", 4}, {"residual_cells", 16}}}}),
            dir.path() / "f") == kExitPass);
  CHECK(fs::exists(dir.path() / "f" / "fields.csv"));
  const json three_d = {{"experiment", "perturb-3d"},
                        {"physics", {{"gamma", 1.4}, {"A0", {1.2, 0, 0, 0, 1, 0, 0, 0, 1 / 1.2}}}},
                        {"perturbation", {{"profile", "polynomial"}}},
                        {"grid", {{"cells", 12}}},
                        {"solver", {{"tau_end", 3.0}, {"output_every", 0.1}}}};
  CHECK(run(Command::Perturb, dir.write("p.json", three_d), dir.path() / "p") == kExitPass);
  const json manifest = read_json(dir.path() / "p" / "manifest.json");
  CHECK(manifest["experiment"] == "perturb-3d");
  CHECK(manifest["files"].size() == 3);
}

TEST_CASE("sweep over gamma gives the formula ratio and is reproducible") {
  ScratchDir dir("sweep");
  const fs::path cfg = dir.write("s.json", {{"experiment", "affine"},
                                            {"physics", {{"A1", kStill}}},
                                            {"sweep", {{"gamma", {1.4, 5.0 / 3.0}}, {"workers", 2}}}});
  REQUIRE(run(Command::Sweep, cfg, dir.path() / "one") == kExitPass);
  std::istringstream summary(slurp(dir.path() / "one" / "summary.csv"));
  std::string line;
  std::getline(summary, line);
  CHECK(line.rfind("cell,gamma,delta,amplitude,mu1,mu0,mu0_over_mu1,", 0) == 0);
  std::vector<double> ratios;
  while (std::getline(summary, line)) {
    std::vector<std::string> cols;
    std::stringstream row(line);
    for (std::string c; std::getline(row, c, ',');) cols.push_back(c);
    REQUIRE(cols.size() >= 9);
    ratios.push_back(std::stod(cols[6]));
  }
  REQUIRE(ratios.size() == 2);
  CHECK(ratios[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(ratios[1] == doctest::Approx(1.0).epsilon(1e-12));

  REQUIRE(run(Command::Sweep, cfg, dir.path() / "two") == kExitPass);
  for (const char* file : {"summary.csv", "cell_000/verdicts.json", "cell_001/trajectory.csv"})
    CHECK(slurp(dir.path() / "one" / file) == slurp(dir.path() / "two" / file));
}

TEST_CASE("sweep errors") {
  ScratchDir dir("sweep_errors");
  CHECK(run(Command::Sweep, dir.write("e.json", {{"experiment", "affine"}}), dir.path() / "e") == kExitConfigError);
  CHECK(run(Command::Sweep, dir.write("v.json", {{"experiment", "verify"}, {"sweep", {{"gamma", {1.4}}}}}),
            dir.path() / "v") == kExitConfigError);
  // A failing cell is recorded and the sweep continues.
  const fs::path partial = dir.write("p.json", {{"experiment", "perturb-radial"},
                                                {"physics", {{"A1", kStill}}},
                                                {"grid", {{"cells", 32}}},
                                                {"solver", {{"tau_end", 0.5}}},
                                                {"sweep", {{"amplitude", {-5.0, 0.0}}}}});
  CHECK(run(Command::Sweep, partial, dir.path() / "p") == kExitCheckFailure);
  const std::string summary = slurp(dir.path() / "p" / "summary.csv");
  CHECK(summary.find("cell_000") != std::string::npos);
  CHECK(summary.find("numerical-failure") != std::string::npos);
  CHECK(summary.find("cell_001,1.6666666666666667,1,0,") != std::string::npos);
}

TEST_CASE("worker count precedence") {
  RunConfig cfg;
  cfg.sweep.workers = 3;
  CHECK(resolve_workers(cfg, 5) == 5);
  CHECK_THROWS_AS(resolve_workers(cfg, 0), ConfigError);
  ::setenv("AFFINELAB_WORKERS", "4", 1);
  CHECK(resolve_workers(cfg, std::nullopt) == 4);
  CHECK(resolve_workers(cfg, 2) == 2);
  ::setenv("AFFINELAB_WORKERS", "four", 1);
  CHECK_THROWS_AS(resolve_workers(cfg, std::nullopt), ConfigError);
  ::unsetenv("AFFINELAB_WORKERS");
  CHECK(resolve_workers(cfg, std::nullopt) == 3);
}
