#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "qi/grid_solver.hpp"
#include "qi/model.hpp"
#include "qi/policies.hpp"

namespace qi {

struct SimOptions {
  std::optional<long> fixed_horizon;  // empty: T geometric with success 1-rho
  bool constrained = true;
  long n_runs = 20000;
  std::uint64_t seed = 0;
};

// One simulated episode. Costs are undiscounted within the episode; the
// geometric horizon realizes the discounting.
struct EpisodeResult {
  long hidden_T = 0;
  long hidden_tau = 0;
  std::vector<int> actions;       // a_0 .. a_{T-1}
  std::vector<int> observations;  // z_1 .. z_{T-1}
  double total_cost = 0.0;
};

struct CostReport {
  long n_runs = 0;
  double mean_cost = 0.0;
  double std_err = 0.0;  // 0 when n_runs == 1
  double ci_lo = 0.0;    // mean -/+ 1.96 * std_err
  double ci_hi = 0.0;
  double regret = 0.0;  // mean_cost - oracle_cost_closed_form(spec)
  std::uint64_t seed = 0;
};

// Simulates episode `episode` of the (seed, spec, policy) ensemble. All
// randomness comes from counter-based streams keyed by (seed, episode,
// purpose), so the result does not depend on scheduling and episodes for
// different policies or QCD thresholds share (T, tau, observation uniforms).
EpisodeResult run_episode(const ProblemSpec& spec, const PolicyKind& kind, const SimOptions& opts,
                          std::uint64_t episode);

// Monte Carlo estimate over opts.n_runs episodes. Episodes run in parallel;
// aggregation is an ordered reduction by episode index, so the report is
// identical at any worker count.
CostReport estimate_cost(const ProblemSpec& spec, const PolicyKind& kind, const SimOptions& opts);

// Evaluates a QCD policy for every declare threshold in h_grid under common
// random numbers and keeps the lowest mean cost; ties go to the smaller h.
struct QcdTuning {
  double best_h = 0.0;
  CostReport report;
};

QcdTuning tune_qcd(const ProblemSpec& spec, bool direct, const std::vector<double>& h_grid,
                   const SimOptions& opts);

// 25 declare thresholds evenly spaced across [0.05, 0.95].
std::vector<double> default_h_grid();

// One output row of the experiment tables; written as CSV with
// write_csv. Analytic rows (policy "approx") carry n_runs = 0.
struct SweepRow {
  std::string param_name;
  double param_value = 0.0;
  double kl_alpha_beta0 = 0.0;
  std::string policy;
  long n_runs = 0;
  double mean_cost = 0.0;
  double std_err = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double regret = 0.0;
  std::uint64_t seed = 0;
};

enum class SweepKind { Rho, Lambda, Delta };

// Benchmark-family parameters held fixed while one of them is swept.
struct FamilyBase {
  double delta = 0.02;
  double rho = 0.95;
  double lambda = 0.1;
};

struct SweepOptions {
  FamilyBase base;
  std::vector<std::string> policies = {"low", "grid", "qcd", "dqcd"};
  long n_runs = 20000;
  std::uint64_t seed = 0;
  bool constrained = true;
  std::vector<double> h_grid = default_h_grid();
  // Exact-solver settings for "grid" rows. Looser than the solver default:
  // Monte Carlo noise dwarfs 1e-6, and high rho needs the extra sweep room.
  GridConfig grid{1000, RepresentativeRule::CellMidpoint, 1e-6, Interpolation::Linear, 400000};
};

// Rebuilds the benchmark family at each value of the swept parameter and
// evaluates the requested policies ("low", "grid", "qcd", "dqcd", "oracle")
// under common random numbers, plus an analytic "approx" row carrying the
// closed-form drift-model cost of the low-complexity thresholds. For the Rho
// kind, `values` are rho values (clamped to [1e-9, 1-1e-9]) and rows report
// param_name "one_minus_rho". A failure for one row (solver non-convergence,
// family out of range) yields nan fields for that row and the sweep
// continues.
std::vector<SweepRow> regret_sweep(SweepKind kind, const std::vector<double>& values,
                                   const SweepOptions& opts);

// Fixed-horizon comparison on the benchmark family: the low-complexity
// policy designed at policy_rho, the unconstrained finite-horizon optimum,
// and the detect-then-intervene baseline at a fixed and at a tuned declare
// threshold, all evaluated without the one-step escalation constraint (the
// detector jumps to the top level on declaration accordingly). Rows per
// lambda: "low", "fhdp", "qcd-fixed", "qcd-tuned".
struct AnomalyOptions {
  std::vector<double> lambdas = {0.01, 0.03, 0.1, 0.3};
  double delta = 0.02;
  double policy_rho = 0.98;
  long fixed_horizon = 50;
  long n_runs = 20000;
  std::uint64_t seed = 0;
  double fixed_h = 0.9;
  std::vector<double> h_grid = default_h_grid();
  GridConfig grid;  // finite-horizon DP resolution
};

std::vector<SweepRow> anomaly_experiment(const AnomalyOptions& opts);

// Header plus one line per row; floating-point fields use 9 significant
// digits so identical runs produce byte-identical files.
void write_csv(std::ostream& os, const std::vector<SweepRow>& rows);

}  // namespace qi
