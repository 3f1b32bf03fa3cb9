#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const fs::path& scratch_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("qi_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = scratch_dir() / name;
  std::ofstream out(p, std::ios::binary);
  out << text;
  return p;
}

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::string& args) {
  const fs::path out = scratch_dir() / "stdout.txt";
  const fs::path err = scratch_dir() / "stderr.txt";
  const std::string cmd = std::string("\"") + QI_CLI_PATH + "\" " + args + " > \"" + out.string() +
                          "\" 2> \"" + err.string() + "\"";
  const int rc = std::system(cmd.c_str());
  CliResult r;
  r.code = rc == -1 ? -1 : (WIFEXITED(rc) ? WEXITSTATUS(rc) : -2);
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s)
    if (c == '\n') ++n;
  return n;
}

constexpr const char* kCsvHeader =
    "param_name,param_value,kl_alpha_beta0,policy,n_runs,mean_cost,stderr,ci_lo,ci_hi,regret,seed";

}  // namespace

TEST_CASE("validate accepts the default problem and rejects bad ones") {
  CHECK(run_cli("validate").code == 0);

  const fs::path good = write_file("raw_spec.json", R"({"spec": {
    "Z": 2, "A": 1,
    "alpha": [0.5, 0.5], "betas": [[0.4, 0.6], [0.5, 0.5]],
    "c_p": [0.0, 1.0], "c_i": [0.0, 0.05],
    "rho": 0.9, "lambda": 0.1}})");
  CHECK(run_cli("validate --config " + good.string()).code == 0);

  const fs::path bad = write_file("bad_rho.json", R"({"spec": {
    "Z": 2, "A": 1,
    "alpha": [0.5, 0.5], "betas": [[0.4, 0.6], [0.5, 0.5]],
    "c_p": [0.0, 1.0], "c_i": [0.0, 0.05],
    "rho": 1.2, "lambda": 0.1}})");
  const CliResult r = run_cli("validate --config " + bad.string());
  CHECK(r.code == 1);
  CHECK(r.err.find("param_range") != std::string::npos);
}

TEST_CASE("malformed input exits with the config error code") {
  const fs::path broken = write_file("broken.json", "{ not json");
  CHECK(run_cli("validate --config " + broken.string()).code == 2);

  const fs::path family = write_file("family.json", R"({"spec": {"family": "exotic"}})");
  CHECK(run_cli("validate --config " + family.string()).code == 2);

  const fs::path missing = scratch_dir() / "does_not_exist.json";
  CHECK(run_cli("validate --config " + missing.string()).code == 2);
}

TEST_CASE("solve emits thresholds and the top-level fixed point") {
  const CliResult r = run_cli("solve --grid-n 50");
  REQUIRE(r.code == 0);
  const json out = json::parse(r.out);
  CHECK(out.at("top_level_value").get<double>() == doctest::Approx(218.0).epsilon(1e-9));
  CHECK(out.at("thresholds").size() == 3);
  CHECK(out.at("monotonicity_violations").get<int>() >= 0);
  CHECK(out.at("solution").at("grid").size() == 50);
}

TEST_CASE("a starved solver exits with the runtime error code") {
  const fs::path cfg =
      write_file("starved.json", R"({"grid": {"max_sweeps": 2, "epsilon": 1e-14}})");
  const CliResult r = run_cli("solve --grid-n 50 --config " + cfg.string());
  CHECK(r.code == 3);
  CHECK(r.err.find("converge") != std::string::npos);
}

TEST_CASE("thresholds reports the closed-form ladder and switch times") {
  const CliResult r = run_cli("thresholds");
  REQUIRE(r.code == 0);
  const json out = json::parse(r.out);
  REQUIRE(out.at("thresholds").size() == 3);
  CHECK(out.at("thresholds")[0].get<double>() == doctest::Approx(0.073206).epsilon(1e-4));
  CHECK(out.at("thresholds")[1].get<double>() == doctest::Approx(0.177340).epsilon(1e-4));
  CHECK(out.at("thresholds")[2].get<double>() == doctest::Approx(0.698011).epsilon(1e-4));
  CHECK(out.at("switch_times") == json({3, 7, 40}));
  CHECK(out.at("bounds").contains("upper"));
  CHECK(out.at("approx_total_cost").is_number());
}

TEST_CASE("simulate is reproducible for a fixed seed") {
  const fs::path cfg = write_file("sim.json",
                                  R"({"spec": {"family": "benchmark", "delta": 0.02,
                                       "rho": 0.9, "lambda": 0.1}})");
  const std::string args = "simulate --config " + cfg.string() + " --runs 200 --seed 42";
  const CliResult a = run_cli(args);
  const CliResult b = run_cli(args);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);

  const CliResult c = run_cli("simulate --config " + cfg.string() + " --runs 200 --seed 43");
  REQUIRE(c.code == 0);
  CHECK(c.out != a.out);

  const json out = json::parse(a.out);
  CHECK(out.at("n_runs").get<long>() == 200);
  CHECK(out.at("seed").get<long>() == 42);
  CHECK(out.at("policy").get<std::string>() == "low");
  CHECK(out.at("mean_cost").is_number());
}

TEST_CASE("simulate tunes a detector when asked") {
  const fs::path cfg = write_file("tune.json",
                                  R"({"spec": {"family": "benchmark", "delta": 0.02,
                                       "rho": 0.9, "lambda": 0.1},
                                      "policy": "dqcd",
                                      "qcd": {"tune": true, "h_grid": [0.2, 0.5, 0.8]}})");
  const CliResult r = run_cli("simulate --config " + cfg.string() + " --runs 200");
  REQUIRE(r.code == 0);
  const json out = json::parse(r.out);
  const double h = out.at("best_h").get<double>();
  CHECK((h == 0.2 || h == 0.5 || h == 0.8));
  CHECK(out.at("policy").get<std::string>() == "dqcd");
}

TEST_CASE("simulate rejects unknown policies") {
  const fs::path cfg = write_file("bogus_policy.json", R"({"policy": "banana"})");
  CHECK(run_cli("simulate --config " + cfg.string() + " --runs 10").code == 2);
}

TEST_CASE("sweep writes a CSV regret table") {
  const fs::path cfg = write_file("sweep.json",
                                  R"({"sweep": {"kind": "lambda", "values": [0.1],
                                       "policies": ["low"]}})");
  const CliResult r = run_cli("sweep --config " + cfg.string() + " --runs 100");
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind(kCsvHeader, 0) == 0);
  CHECK(count_lines(r.out) == 3);  // header + low + approx
  CHECK(r.out.find("lambda,0.1,") != std::string::npos);
  // The protocol base for lambda sweeps is out of family range and clamps.
  CHECK(r.err.find("clamped") != std::string::npos);
}

TEST_CASE("discount sweeps report the complementary discount") {
  const fs::path cfg = write_file("sweep_rho.json",
                                  R"({"sweep": {"kind": "rho", "values": [0.9],
                                       "policies": ["low"]}})");
  const CliResult r = run_cli("sweep --config " + cfg.string() + " --runs 100");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("one_minus_rho,0.1,") != std::string::npos);
}

TEST_CASE("anomaly writes one row per policy and lambda") {
  const fs::path cfg = write_file("anomaly.json",
                                  R"({"anomaly": {"lambdas": [0.05], "fixed_horizon": 10,
                                       "h_grid": [0.3, 0.9]},
                                      "grid": {"num_cells": 100}})");
  const CliResult r = run_cli("anomaly --config " + cfg.string() + " --runs 50");
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind(kCsvHeader, 0) == 0);
  CHECK(count_lines(r.out) == 5);
  for (const char* policy : {",low,", ",fhdp,", ",qcd-fixed,", ",qcd-tuned,"}) {
    CHECK(r.out.find(policy) != std::string::npos);
  }
}

TEST_CASE("output lands in the requested file") {
  const fs::path dest = scratch_dir() / "report.json";
  const CliResult r = run_cli("simulate --runs 20 --out " + dest.string());
  REQUIRE(r.code == 0);
  CHECK(r.out.empty());
  const json out = json::parse(slurp(dest));
  CHECK(out.at("n_runs").get<long>() == 20);
}
