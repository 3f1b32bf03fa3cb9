#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "qi/belief.hpp"
#include "qi/grid_solver.hpp"
#include "qi/local_approx.hpp"
#include "qi/model.hpp"
#include "qi/policies.hpp"
#include "qi/rng.hpp"
#include "qi/simulator.hpp"
#include "test_support.hpp"

using namespace qi;

namespace {

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

struct SingleThread {
  SingleThread() { setenv("QI_THREADS", "1", 1); }
  ~SingleThread() { unsetenv("QI_THREADS"); }
};

void report(const char* id, bool ok, const std::string& detail) {
  std::printf("%s %s — %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, ...) {
  va_list args;
  va_start(args, f);
  char buf[512];
  vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

double rel_gap(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0});
}

// Z = 2, A = 1 instance with an informative post-change shift and rho = 0.5.
ProblemSpec small_instance() {
  ProblemSpec s;
  s.num_obs = 2;
  s.num_actions = 1;
  s.alpha = {0.7, 0.3};
  s.betas = {{0.4, 0.6}, {0.7, 0.3}};
  s.c_p = {0.0, 1.0};
  s.c_i = {0.0, 0.05};
  s.rho = 0.5;
  s.lambda = 0.2;
  return s;
}

// Z = 2, A = 1 instance whose reachable beliefs from pi = 0 over three epochs
// are dyadic rationals landing exactly on the nodes of a 64-cell left-edge
// grid, so backward induction and tree enumeration agree bit for bit.
ProblemSpec dyadic_instance() {
  ProblemSpec s;
  s.num_obs = 2;
  s.num_actions = 1;
  s.alpha = {0.75, 0.25};
  s.betas = {{0.75, 0.25}, {0.75, 0.25}};
  s.c_p = {0.0, 1.0};
  s.c_i = {0.0, 5.0 / 32.0};
  s.rho = 0.5;
  s.lambda = 0.25;
  return s;
}

ProblemSpec taylor_family(double delta) {
  ProblemSpec s;
  s.num_obs = 2;
  s.num_actions = 1;
  s.alpha = {0.5, 0.5};
  s.betas = {{0.5 - delta, 0.5 + delta}, {0.5, 0.5}};
  s.c_p = {0.0, 1.0};
  s.c_i = {0.0, 0.1};
  s.rho = 0.9;
  s.lambda = 0.1;
  return s;
}

const std::filesystem::path& scratch_dir() {
  static const std::filesystem::path dir = [] {
    auto d = std::filesystem::temp_directory_path() / ("qi_acc_" + std::to_string(::getpid()));
    std::filesystem::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli_env(const std::string& env, const std::string& args) {
  const std::string cmd = env + " \"" + QI_CLI_PATH + "\" " + args + " 2> /dev/null";
  const int rc = std::system(cmd.c_str());
  return rc == -1 ? -1 : (WIFEXITED(rc) ? WEXITSTATUS(rc) : -2);
}

}  // namespace

TEST_CASE("A01 top-level value of the benchmark grid solve") {
  SingleThread st;
  Timer timer;
  const ProblemSpec spec = make_benchmark_family(0.02, 0.99, 0.03);
  GridConfig cfg;
  cfg.num_cells = 1000;
  cfg.epsilon = 1e-8;
  const GridSolution sol = solve_grid(spec, cfg);
  double dev = 0.0;
  for (double v : sol.V[3]) dev = std::max(dev, std::abs(v - 218.0));
  const double secs = timer.seconds();
  const bool ok_dev = dev <= 1e-4;
  const bool ok_time = secs <= 60.0;
  report("A01", ok_dev && ok_time,
         fmt("max_j |V[A][j] - 218.0| = %.3g (limit 1e-4); %.2fs single-threaded (limit 60s)", dev,
             secs));
  CHECK(ok_dev);
  CHECK(ok_time);
}

TEST_CASE("A02 closed-form policy cost matches its trajectory expansion") {
  Timer timer;
  RngStream rs = make_stream(2024, 0, StreamPurpose::Observation);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const ProblemSpec spec = qi::testing::random_spec(rs);
    ThresholdPolicy th;
    for (int a = 0; a < spec.num_actions; ++a) th.thresholds.push_back(0.9 * rs.next_unit());
    std::sort(th.thresholds.begin(), th.thresholds.end());
    const double closed = approx_total_cost(spec, th);
    const double stepped = approx_cost_trajectory_oracle(spec, th);
    worst = std::max(worst, rel_gap(closed, stepped));
  }
  const double secs = timer.seconds();
  const bool ok_gap = worst <= 1e-9;
  const bool ok_time = secs <= 10.0;
  report("A02", ok_gap && ok_time,
         fmt("worst relative gap %.3g over 100 instances (limit 1e-9); %.2fs (limit 10s)", worst,
             secs));
  CHECK(ok_gap);
  CHECK(ok_time);
}

TEST_CASE("A03 drift-model thresholds are bracketed and the ladder is exact") {
  Timer timer;
  bool ok_bracket = true;
  double worst_excess = 0.0;
  for (double delta : {0.005, 0.01, 0.02}) {
    const ProblemSpec spec = make_benchmark_family(delta, 0.99, 0.03);
    const ApproxSolution sol = solve_approx(spec);
    const ThresholdBounds b = threshold_bounds(spec, cost_deltas(spec));
    const double cell = 1.0 / sol.config.num_cells;
    for (int a = 1; a <= spec.num_actions; ++a) {
      const double lo_c = std::clamp(b.lower_raw[a], 0.0, 1.0);
      const double hi_c = std::clamp(b.upper_raw[a], 0.0, 1.0);
      const double th = sol.thresholds.thresholds[a - 1];
      const double th_c = std::isfinite(th) ? th : 1.0;
      const double lo = std::min(lo_c, hi_c) - cell;
      const double hi = std::max(lo_c, hi_c) + cell;
      worst_excess = std::max({worst_excess, lo - th_c, th_c - hi});
      if (th_c < lo || th_c > hi) ok_bracket = false;
    }
  }

  const ThresholdPolicy ladder = low_complexity_policy(make_benchmark_family(0.02, 0.99, 0.03));
  const double expected[3] = {0.073206, 0.177340, 0.698011};
  double worst_ladder = 0.0;
  for (int a = 0; a < 3; ++a)
    worst_ladder = std::max(worst_ladder, std::abs(ladder.thresholds[a] - expected[a]));
  const bool ok_ladder = worst_ladder <= 1e-5;
  report("A03", ok_bracket && ok_ladder,
         fmt("bracket excess %.3g grid cells beyond bounds (limit 0); ladder deviation %.3g "
             "(limit 1e-5); %.2fs",
             worst_excess, worst_ladder, timer.seconds()));
  CHECK(ok_bracket);
  CHECK(ok_ladder);
}

TEST_CASE("A04 Monte Carlo oracle cost matches the closed form") {
  Timer timer;
  SimOptions opts;
  opts.constrained = false;
  opts.n_runs = 100000;
  const PolicyKind oracle{OraclePolicy{}};

  const ProblemSpec bench = make_benchmark_family(0.02, 0.99, 0.03);
  const CostReport r0 = estimate_cost(bench, oracle, opts);
  double worst_se = std::abs(r0.mean_cost - 212.9622) / r0.std_err;

  RngStream rs = make_stream(99, 0, StreamPurpose::Observation);
  for (int i = 0; i < 5; ++i) {
    const double rho = 0.8 + 0.19 * rs.next_unit();
    const double lambda = 0.02 + 0.48 * rs.next_unit();
    const ProblemSpec spec = make_benchmark_family(0.02, rho, lambda);
    const CostReport r = estimate_cost(spec, oracle, opts);
    worst_se = std::max(worst_se,
                        std::abs(r.mean_cost - oracle_cost_closed_form(spec)) / r.std_err);
  }
  const double secs = timer.seconds();
  const bool ok_dev = worst_se <= 3.0;
  const bool ok_time = secs <= 120.0;
  report("A04", ok_dev && ok_time,
         fmt("worst deviation %.2f standard errors over 6 settings, n=100000 (limit 3); "
             "%.1fs (limit 120s)",
             worst_se, secs));
  CHECK(ok_dev);
  CHECK(ok_time);
}

TEST_CASE("A05 grid-optimal policy is threshold-structured") {
  Timer timer;
  const ProblemSpec spec = make_benchmark_family(0.02, 0.99, 0.03);
  GridConfig cfg;
  cfg.num_cells = 1000;
  cfg.epsilon = 1e-8;
  const ThresholdExtraction ex = extract_thresholds(solve_grid(spec, cfg));
  const bool ok = ex.monotonicity_violations == 0;
  report("A05", ok,
         fmt("%d monotonicity violations (limit 0); thresholds [%.4f, %.4f, %.4f]; %.2fs",
             ex.monotonicity_violations, ex.thresholds.thresholds[0], ex.thresholds.thresholds[1],
             ex.thresholds.thresholds[2], timer.seconds()));
  CHECK(ok);
}

TEST_CASE("A06 regret ordering under common random numbers") {
  Timer timer;
  SweepOptions opts;
  opts.policies = {"low", "grid", "qcd", "dqcd"};
  opts.n_runs = 100000;
  opts.seed = 0;
  const std::vector<SweepRow> rows = regret_sweep(SweepKind::Delta, {0.002}, opts);
  REQUIRE(rows.size() == 5);
  const SweepRow& low = rows[0];
  const SweepRow& grid = rows[1];
  const SweepRow& qcd = rows[2];
  const SweepRow& dqcd = rows[3];

  const double combined = std::hypot(low.std_err, grid.std_err);
  const bool ok_grid = low.regret <= 1.15 * grid.regret + 2.0 * combined;

  const bool ok_sep_qcd = low.regret < qcd.regret && low.ci_hi < qcd.ci_lo;
  const bool ok_sep_dqcd = low.regret < dqcd.regret && low.ci_hi < dqcd.ci_lo;

  const double best_qcd = std::min(qcd.regret, dqcd.regret);
  const double improvement = best_qcd - low.regret;
  const bool ok_gain = improvement >= 0.05 * best_qcd;

  report("A06", ok_grid && ok_sep_qcd && ok_sep_dqcd && ok_gain,
         fmt("regret low %.3f vs grid %.3f (bound %.3f); CI gaps to qcd %.3f / dqcd %.3f (need "
             ">0); improvement %.3f vs 5%% floor %.3f; n=100000; %.1fs",
             low.regret, grid.regret, 1.15 * grid.regret + 2.0 * combined, qcd.ci_lo - low.ci_hi,
             dqcd.ci_lo - low.ci_hi, improvement, 0.05 * best_qcd, timer.seconds()));
  CHECK(ok_grid);
  CHECK(ok_sep_qcd);
  CHECK(ok_sep_dqcd);
  CHECK(ok_gain);
}

TEST_CASE("A07 fixed-horizon policy comparison") {
  Timer timer;
  const AnomalyOptions opts;  // lambda in {0.01, 0.03, 0.1, 0.3}, T=50, n=20000
  const std::vector<SweepRow> rows = anomaly_experiment(opts);
  REQUIRE(rows.size() == 16);

  bool ok_overlap = true;
  double min_overlap = 1e300;
  for (int i = 0; i < 4; ++i) {
    const SweepRow& low = rows[4 * i + 0];
    const SweepRow& fhdp = rows[4 * i + 1];
    const double overlap = std::min(low.ci_hi, fhdp.ci_hi) - std::max(low.ci_lo, fhdp.ci_lo);
    min_overlap = std::min(min_overlap, overlap);
    if (overlap < 0.0) ok_overlap = false;
  }

  bool ok_sep = true;
  double min_sep = 1e300;
  for (int i : {1, 2}) {  // lambda = 0.03 and 0.1
    const SweepRow& low = rows[4 * i + 0];
    const SweepRow& fixed = rows[4 * i + 2];
    const SweepRow& tuned = rows[4 * i + 3];
    const SweepRow& best = fixed.mean_cost < tuned.mean_cost ? fixed : tuned;
    const double sep = best.ci_lo - low.ci_hi;
    min_sep = std::min(min_sep, sep);
    if (!(best.mean_cost > low.mean_cost && sep > 0.0)) ok_sep = false;
  }

  const double secs = timer.seconds();
  const bool ok_time = secs <= 600.0;
  report("A07", ok_overlap && ok_sep && ok_time,
         fmt("low/fhdp min CI overlap %.3f (need >=0); best-QCD vs low min CI gap %.3f at "
             "lambda {0.03, 0.1} (need >0); %.1fs (limit 600s)",
             min_overlap, min_sep, secs));
  CHECK(ok_overlap);
  CHECK(ok_sep);
  CHECK(ok_time);
}

TEST_CASE("A08 belief update property suite") {
  Timer timer;
  RngStream rs = make_stream(8, 0, StreamPurpose::Observation);
  bool ok_range = true, ok_mono_z = true, ok_mono_pi = true;
  double worst_martingale = 0.0;
  const int kSpecs = 200, kCases = 500;
  for (int s = 0; s < kSpecs; ++s) {
    const ProblemSpec spec = qi::testing::random_spec(rs);
    for (int i = 0; i < kCases; ++i) {
      const double pi = rs.next_unit();
      const double pi2 = rs.next_unit();
      const int a = static_cast<int>(rs.next_unit() * (spec.num_actions + 1));
      const std::vector<double> sigma = observation_likelihood(spec, pi, a);
      const double predicted = predict(pi, spec.lambda);
      double mart = 0.0, prev_post = -1.0;
      for (int z = 0; z < spec.num_obs; ++z) {
        const double post = update(spec, pi, a, z);
        if (post < 0.0 || post > 1.0) ok_range = false;
        if (post < prev_post - 1e-12) ok_mono_z = false;
        prev_post = post;
        mart += sigma[z] * post;
        const double lo_post = update(spec, std::min(pi, pi2), a, z);
        const double hi_post = update(spec, std::max(pi, pi2), a, z);
        if (lo_post > hi_post + 1e-12) ok_mono_pi = false;
      }
      worst_martingale = std::max(worst_martingale, std::abs(mart - predicted));
    }
  }

  double logerr[3];
  const double deltas[3] = {1e-1, 1e-2, 1e-3};
  for (int i = 0; i < 3; ++i) {
    const ProblemSpec spec = taylor_family(deltas[i]);
    const double exact = update(spec, 0.5, 0, 1);
    const double approx = first_order_update(spec, 0.5, 0, 1);
    logerr[i] = std::log10(std::abs(approx - exact));
  }
  const double slope = (logerr[0] - logerr[2]) / 2.0;

  const double secs = timer.seconds();
  const bool ok_mart = worst_martingale <= 1e-12;
  const bool ok_slope = slope >= 1.9;
  const bool ok_time = secs <= 30.0;
  const bool ok = ok_range && ok_mono_z && ok_mono_pi && ok_mart && ok_slope && ok_time;
  report("A08", ok,
         fmt("100000 cases: range %s, z-monotone %s, pi-monotone %s; worst martingale gap %.2g "
             "(limit 1e-12); Taylor slope %.3f (limit 1.9); %.1fs (limit 30s)",
             ok_range ? "ok" : "violated", ok_mono_z ? "ok" : "violated",
             ok_mono_pi ? "ok" : "violated", worst_martingale, slope, secs));
  CHECK(ok_range);
  CHECK(ok_mono_z);
  CHECK(ok_mono_pi);
  CHECK(ok_mart);
  CHECK(ok_slope);
  CHECK(ok_time);
}

TEST_CASE("A09 small-instance equivalence with exhaustive expansion") {
  Timer timer;
  const ProblemSpec spec = small_instance();
  GridConfig cfg;
  cfg.num_cells = 2000;
  cfg.representative = RepresentativeRule::CellLeftEdge;
  cfg.epsilon = 1e-12;
  const GridSolution sol = solve_grid(spec, cfg);
  // rho = 0.5, depth 12: truncation tail below 0.5^12 * 2.1 ~ 5.2e-4.
  const double brute = qi::testing::enum_discounted(spec, 0.0, 0, 12);
  const double diff = std::abs(eval_value(sol, 0.0, 0) - brute);
  const bool ok_grid = diff <= 1e-3;

  const ProblemSpec toy = dyadic_instance();
  GridConfig toy_cfg;
  toy_cfg.num_cells = 64;
  toy_cfg.representative = RepresentativeRule::CellLeftEdge;
  toy_cfg.epsilon = 1e-12;
  bool ok_exact = true;
  double fh_val = 0.0, enum_val = 0.0;
  for (bool constrained : {true, false}) {
    const FiniteHorizonSolution fh = solve_finite_horizon(toy, 3, toy_cfg, constrained);
    fh_val = fh.values[0][0][0];
    enum_val = qi::testing::enum_finite_horizon(toy, 0.0, 0, 0, 3, constrained);
    if (fh_val != enum_val) ok_exact = false;
  }

  report("A09", ok_grid && ok_exact,
         fmt("grid vs depth-12 expansion |diff| = %.3g (limit 1e-3); finite-horizon value "
             "%.17g == enumeration %.17g bitwise: %s; %.2fs",
             diff, fh_val, enum_val, ok_exact ? "yes" : "no", timer.seconds()));
  CHECK(ok_grid);
  CHECK(ok_exact);
}

TEST_CASE("A10 experiment CSVs are byte-identical across seeds and worker counts") {
  Timer timer;
  const auto dir = scratch_dir();
  std::ofstream(dir / "sweep.json") << R"({"sweep": {"kind": "lambda", "values": [0.1, 0.3],
    "policies": ["low", "qcd"]}, "qcd": {"h_grid": [0.2, 0.6]}})";
  std::ofstream(dir / "anomaly.json") << R"({"anomaly": {"lambdas": [0.05], "fixed_horizon": 20,
    "h_grid": [0.3, 0.9]}, "grid": {"num_cells": 200}})";

  bool ok_run = true;
  std::vector<std::string> sweeps, anomalies;
  for (const char* threads : {"1", "2", "4", "1"}) {
    const std::string env = std::string("QI_THREADS=") + threads;
    const auto sweep_out = dir / (std::string("sweep_") + threads + ".csv");
    const auto anom_out = dir / (std::string("anom_") + threads + ".csv");
    if (run_cli_env(env, "sweep --config " + (dir / "sweep.json").string() +
                             " --runs 2000 --seed 7 --out " + sweep_out.string()) != 0)
      ok_run = false;
    if (run_cli_env(env, "anomaly --config " + (dir / "anomaly.json").string() +
                             " --runs 2000 --seed 7 --out " + anom_out.string()) != 0)
      ok_run = false;
    sweeps.push_back(slurp(sweep_out));
    anomalies.push_back(slurp(anom_out));
  }

  bool ok_bytes = ok_run && !sweeps[0].empty() && !anomalies[0].empty();
  for (std::size_t i = 1; i < sweeps.size(); ++i) {
    if (sweeps[i] != sweeps[0] || anomalies[i] != anomalies[0]) ok_bytes = false;
  }

  report("A10", ok_run && ok_bytes,
         fmt("sweep (%zu bytes) and anomaly (%zu bytes) identical across QI_THREADS {1,2,4} and a "
             "repeat run: %s; %.1fs",
             sweeps[0].size(), anomalies[0].size(), ok_bytes ? "yes" : "no", timer.seconds()));
  CHECK(ok_run);
  CHECK(ok_bytes);
}
