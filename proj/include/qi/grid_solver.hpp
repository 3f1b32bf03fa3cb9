#pragma once

#include <limits>
#include <stdexcept>
#include <vector>

#include "qi/model.hpp"

namespace qi {

enum class RepresentativeRule { CellMidpoint, CellLeftEdge };
enum class Interpolation { Linear, NearestCell };

// Uniform partition of [0,1] into num_cells cells. Off-grid values are read
// either by linear interpolation between cell representatives (flat beyond
// the first/last representative) or by the representative of the containing
// cell (NearestCell, kept for ablation).
struct GridConfig {
  int num_cells = 1000;
  RepresentativeRule representative = RepresentativeRule::CellMidpoint;
  double epsilon = 1e-8;
  Interpolation interpolation = Interpolation::Linear;
  long max_sweeps = 100000;
};

// Grid primitives shared by the solvers. make_grid places the representative
// of each cell; locate resolves an arbitrary belief to a two-point read
// row[idx] + w*(row[idx+1] - row[idx]) under the configured interpolation.
std::vector<double> make_grid(const GridConfig& cfg);

struct Loc {
  int idx;
  double w;
};

Loc locate(const std::vector<double>& grid, double x, Interpolation interp, int num_cells);

inline double read(const std::vector<double>& row, const Loc& loc) {
  return row[loc.idx] + loc.w * (row[loc.idx + 1] - row[loc.idx]);
}

inline double eval_row(const std::vector<double>& row, const std::vector<double>& grid, double x,
                       const GridConfig& cfg) {
  return read(row, locate(grid, x, cfg.interpolation, cfg.num_cells));
}

// Escalation thresholds: thresholds[a-1] is the belief at which level a
// becomes preferable to level a-1. kNever marks a level that is never worth
// entering. Must be nondecreasing.
struct ThresholdPolicy {
  static constexpr double kNever = std::numeric_limits<double>::infinity();
  std::vector<double> thresholds;  // length A
};

// Converged discounted value tables on the belief grid.
//   J[a][j]     : value of committing to level a at grid[j]
//   V[a][j]     : value at grid[j] when the current level is a
//   policy[a][j]: minimizing level in {a, min(a+1, A)}, ties to the lower one
struct GridSolution {
  std::vector<double> grid;
  std::vector<std::vector<double>> J;
  std::vector<std::vector<double>> V;
  std::vector<std::vector<int>> policy;
  long sweeps_used = 0;
  double final_residual = 0.0;
  std::vector<double> residual_history;  // most recent sup-norm changes, oldest first
  GridConfig config;
};

struct ConvergenceError : std::runtime_error {
  ConvergenceError(const std::string& what, double residual, long sweeps)
      : std::runtime_error(what), final_residual(residual), sweeps(sweeps) {}
  double final_residual;
  long sweeps;
};

// Value iteration for the discounted escalation problem: from level a the
// next level is a or a+1 (capped at A). Jacobi sweeps: all J entries are
// rebuilt from the previous V tables, then all V entries from the new J.
// Stops when the sup-norm change of V is at most epsilon; throws
// ConvergenceError if max_sweeps is exhausted first.
GridSolution solve_grid(const ProblemSpec& spec, const GridConfig& cfg = {});

// Value of holding the highest level forever. Because betas[A] == alpha the
// fixed point is constant in the belief: (c_i[A] + rho*sum alpha*c_p)/(1-rho).
double top_level_value(const ProblemSpec& spec);

// Reads V[a_tilde] at an arbitrary belief using the solution's
// interpolation rule.
double eval_value(const GridSolution& sol, double pi, int a_tilde);

struct ThresholdExtraction {
  ThresholdPolicy thresholds;
  int monotonicity_violations = 0;  // raw crossings repaired by the running max
};

// First grid representative at which each escalation fires. Non-monotone raw
// thresholds (grid artifacts) are repaired with a running max and counted.
ThresholdExtraction extract_thresholds(const GridSolution& sol);

// Backward induction over a fixed number of decision epochs with no
// geometric stopping. values[t][a][j] is the optimal cost-to-go at epoch t
// with current level a and belief grid[j]; at the final epoch only the
// intervention cost is paid. When constrained, actions are {a, min(a+1, A)};
// otherwise all of {0..A}.
struct FiniteHorizonSolution {
  std::vector<double> grid;
  int horizon = 0;
  bool constrained = true;
  std::vector<std::vector<std::vector<double>>> values;  // [t][a][j]
  std::vector<std::vector<std::vector<int>>> policy;     // [t][a][j]
  GridConfig config;
};

FiniteHorizonSolution solve_finite_horizon(const ProblemSpec& spec, int horizon,
                                           const GridConfig& cfg, bool constrained);

}  // namespace qi
