#pragma once

#include <vector>

#include "qi/grid_solver.hpp"
#include "qi/model.hpp"

namespace qi {

// Aggregate cost coefficients of the intervention levels. Indexing matches
// the level: A_p[a] is defined for a in {0..A}; D_p, D_i are level-to-level
// differences defined for a in {1..A} with slot 0 unused (kept zero).
struct CostDeltas {
  std::vector<double> A_p;  // sum_z (betas[a] - alpha) * c_p
  std::vector<double> D_p;  // sum_z (betas[a] - betas[a-1]) * c_p
  std::vector<double> D_i;  // c_i[a] - c_i[a-1]
  double B_p = 0.0;         // sum_z alpha * c_p
};

CostDeltas cost_deltas(const ProblemSpec& spec);

// Fixed point of the drift-only recursion, where the belief follows its
// deterministic predicted path and the per-step observation cost is replaced
// by its mean B_p + pi~ * A_p[a]:
//   Jt_a(pi) = (c_i[a] + rho*B_p) + pi~ * rho * A_p[a] + rho * Vt_a(pi~)
//   Vt_a(pi) = min(Jt_a(pi), Jt_{min(a+1,A)}(pi))
// Solved by value iteration on a fine grid; thresholds are the first grid
// representatives where the minimizer switches upward (kNever if it never
// does).
struct ApproxSolution {
  ThresholdPolicy thresholds;
  double value_at_zero = 0.0;  // Vt_0(0)
  std::vector<double> grid;
  std::vector<std::vector<double>> V;  // (A+1) x N, rows are Vt_a
  long sweeps_used = 0;
  double final_residual = 0.0;
  int monotonicity_violations = 0;
  GridConfig config;
};

// Default grid for solve_approx: finer and tighter than the exact solver,
// with left-edge representatives so the belief 0 is itself a grid point.
GridConfig approx_default_config();

ApproxSolution solve_approx(const ProblemSpec& spec, const GridConfig& cfg = approx_default_config());

// Drift-only advantage of stepping from level a to a+1 (a < A):
//   D_i[a+1] + pi~ * rho * D_p[a+1] + rho * (Vt_{a+1}(pi~) - Vt_a(pi~)).
// Negative means escalating is preferable.
double approx_difference(const ProblemSpec& spec, const CostDeltas& deltas,
                         const ApproxSolution& sol, int action, double pi);

// Closed-form threshold bounds for the drift-only solution. upper[a] is
// exact for a == A. Raw values are kept alongside the [0,1]-clamped ones;
// `inverted` lists levels whose raw lower bound exceeds the raw upper bound.
struct ThresholdBounds {
  std::vector<double> lower, upper;          // clamped to [0,1]; slot 0 unused
  std::vector<double> lower_raw, upper_raw;  // before clamping
  std::vector<int> inverted;
};

ThresholdBounds threshold_bounds(const ProblemSpec& spec, const CostDeltas& deltas);

// First step t >= 0 at which the uncontrolled belief path 1-(1-lambda)^t
// reaches `threshold`. Requires 0 <= threshold < 1. A tolerance guard snaps
// near-integer log ratios so thresholds that sit exactly on the path do not
// round up.
long switch_time(double threshold, double lambda);

// Closed-form total discounted cost of following a threshold policy on the
// drift-only model, starting from belief 0. Requires every threshold to lie
// in [0,1).
double approx_total_cost(const ProblemSpec& spec, const ThresholdPolicy& thresholds);

// Same quantity accumulated step by step along the deterministic belief
// path, truncated once rho^t times the cost scale drops below 1e-14. Kept
// deliberately naive as an independent cross-check of approx_total_cost.
double approx_cost_trajectory_oracle(const ProblemSpec& spec, const ThresholdPolicy& thresholds);

}  // namespace qi
