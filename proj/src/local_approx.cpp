#include "qi/local_approx.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "qi/belief.hpp"
#include "qi/util.hpp"

namespace qi {

CostDeltas cost_deltas(const ProblemSpec& spec) {
  const int A = spec.num_actions;
  const int Z = spec.num_obs;
  CostDeltas d;
  d.A_p.assign(A + 1, 0.0);
  d.D_p.assign(A + 1, 0.0);
  d.D_i.assign(A + 1, 0.0);
  for (int z = 0; z < Z; ++z) d.B_p += spec.alpha[z] * spec.c_p[z];
  for (int a = 0; a <= A; ++a) {
    for (int z = 0; z < Z; ++z)
      d.A_p[a] += (spec.betas[a][z] - spec.alpha[z]) * spec.c_p[z];
  }
  for (int a = 1; a <= A; ++a) {
    for (int z = 0; z < Z; ++z)
      d.D_p[a] += (spec.betas[a][z] - spec.betas[a - 1][z]) * spec.c_p[z];
    d.D_i[a] = spec.c_i[a] - spec.c_i[a - 1];
  }
  return d;
}

GridConfig approx_default_config() {
  GridConfig cfg;
  cfg.num_cells = 10000;
  cfg.representative = RepresentativeRule::CellLeftEdge;
  cfg.epsilon = 1e-10;
  cfg.interpolation = Interpolation::Linear;
  cfg.max_sweeps = 200000;
  return cfg;
}

ApproxSolution solve_approx(const ProblemSpec& spec, const GridConfig& cfg) {
  const int A = spec.num_actions;
  const int N = cfg.num_cells;
  ApproxSolution sol;
  sol.config = cfg;
  sol.grid = make_grid(cfg);

  // Predicted-belief successor of each grid point, precomputed once.
  std::vector<Loc> next(N);
  for (int j = 0; j < N; ++j)
    next[j] = locate(sol.grid, predict(sol.grid[j], spec.lambda), cfg.interpolation, N);

  const int rows = A + 1;
  std::vector<std::vector<double>> V(rows, std::vector<double>(N, 0.0)),
      Vnew(rows, std::vector<double>(N, 0.0)),
      J(rows, std::vector<double>(N, 0.0));
  std::vector<std::vector<int>> policy(rows, std::vector<int>(N, 0));

  CostDeltas d = cost_deltas(spec);
  const int workers = worker_count();

  long sweeps = 0;
  double residual = std::numeric_limits<double>::infinity();
  while (sweeps < cfg.max_sweeps) {
    for (int a = 0; a <= A; ++a) {
      const double base = spec.c_i[a] + spec.rho * d.B_p;
      const double slope = spec.rho * d.A_p[a];
      const std::vector<double>& cont = V[a];
      std::vector<double>& out = J[a];
      parallel_for(N, workers, [&](long lo, long hi) {
        for (long j = lo; j < hi; ++j) {
          const double pt = predict(sol.grid[j], spec.lambda);
          out[j] = base + pt * slope + spec.rho * read(cont, next[j]);
        }
      });
    }
    for (int a = 0; a <= A; ++a) {
      const int up = std::min(a + 1, A);
      const std::vector<double>& stay = J[a];
      const std::vector<double>& step = J[up];
      std::vector<double>& out = Vnew[a];
      std::vector<int>& pol = policy[a];
      parallel_for(N, workers, [&](long lo, long hi) {
        for (long j = lo; j < hi; ++j) {
          if (step[j] < stay[j]) {
            out[j] = step[j];
            pol[j] = up;
          } else {
            out[j] = stay[j];
            pol[j] = a;
          }
        }
      });
    }
    residual = 0.0;
    for (int a = 0; a <= A; ++a)
      for (int j = 0; j < N; ++j)
        residual = std::max(residual, std::abs(Vnew[a][j] - V[a][j]));
    V.swap(Vnew);
    ++sweeps;
    if (residual <= cfg.epsilon) break;
  }
  if (residual > cfg.epsilon)
    throw ConvergenceError("drift-only value iteration did not converge", residual, sweeps);

  sol.V = std::move(V);
  sol.sweeps_used = sweeps;
  sol.final_residual = residual;

  sol.thresholds.thresholds.assign(A, ThresholdPolicy::kNever);
  for (int a = 1; a <= A; ++a) {
    for (int j = 0; j < N; ++j) {
      if (policy[a - 1][j] == a) {
        sol.thresholds.thresholds[a - 1] = sol.grid[j];
        break;
      }
    }
  }
  // Repair any ordering noise from grid effects, lowest level wins.
  double running = 0.0;
  for (int a = 0; a < A; ++a) {
    double& th = sol.thresholds.thresholds[a];
    if (th < running) {
      ++sol.monotonicity_violations;
      th = running;
    }
    running = th;
  }
  sol.value_at_zero = eval_row(sol.V[0], sol.grid, 0.0, sol.config);
  return sol;
}

double approx_difference(const ProblemSpec& spec, const CostDeltas& deltas,
                         const ApproxSolution& sol, int action, double pi) {
  assert(action >= 0 && action < spec.num_actions);
  const double pt = predict(pi, spec.lambda);
  const double v_up = eval_row(sol.V[action + 1], sol.grid, pt, sol.config);
  const double v_at = eval_row(sol.V[action], sol.grid, pt, sol.config);
  return deltas.D_i[action + 1] + pt * spec.rho * deltas.D_p[action + 1] +
         spec.rho * (v_up - v_at);
}

ThresholdBounds threshold_bounds(const ProblemSpec& spec, const CostDeltas& d) {
  const int A = spec.num_actions;
  const double rho = spec.rho;
  const double lam = spec.lambda;
  ThresholdBounds b;
  b.lower_raw.assign(A + 1, 0.0);
  b.upper_raw.assign(A + 1, 0.0);
  for (int a = 1; a <= A; ++a) {
    if (d.D_p[a] >= 0.0)
      throw std::invalid_argument("threshold_bounds: D_p must be negative, violated at action " +
                                  std::to_string(a));
    // With D_p[a] < 0 the denominator below is positive; upper_raw is where
    // drift alone balances the level cost, exact at the top level.
    const double denom = -(1.0 - lam) * rho * d.D_p[a];
    b.upper_raw[a] = d.D_i[a] / denom - lam / (1.0 - lam);
    double tail = 0.0;
    double rpow = 1.0;
    for (int j = a + 1; j <= A; ++j) {
      rpow *= rho;
      tail += rpow * (d.D_i[j] + rho * d.D_p[j]);
    }
    b.lower_raw[a] = b.upper_raw[a] + tail / denom;
  }
  b.lower.assign(A + 1, 0.0);
  b.upper.assign(A + 1, 0.0);
  for (int a = 1; a <= A; ++a) {
    b.lower[a] = std::clamp(b.lower_raw[a], 0.0, 1.0);
    b.upper[a] = std::clamp(b.upper_raw[a], 0.0, 1.0);
    if (b.lower_raw[a] > b.upper_raw[a]) b.inverted.push_back(a);
  }
  return b;
}

long switch_time(double threshold, double lambda) {
  if (!(threshold >= 0.0 && threshold < 1.0))
    throw std::invalid_argument("switch_time: threshold must lie in [0,1)");
  if (!(lambda > 0.0 && lambda <= 1.0))
    throw std::invalid_argument("switch_time: lambda must lie in (0,1]");
  if (threshold == 0.0) return 0;
  if (lambda == 1.0) return 1;  // path jumps to 1 at t=1
  // Smallest t with 1-(1-lambda)^t >= threshold.
  const double ratio = std::log1p(-threshold) / std::log1p(-lambda);
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) <= 1e-12 * std::max(1.0, std::abs(ratio)))
    return static_cast<long>(nearest);
  return static_cast<long>(std::ceil(ratio));
}

double approx_total_cost(const ProblemSpec& spec, const ThresholdPolicy& thresholds) {
  const int A = spec.num_actions;
  if (static_cast<int>(thresholds.thresholds.size()) != A)
    throw std::invalid_argument("approx_total_cost: threshold count must equal num_actions");
  for (double th : thresholds.thresholds)
    if (!(th >= 0.0 && th < 1.0))
      throw std::invalid_argument("approx_total_cost: thresholds must lie in [0,1)");

  CostDeltas d = cost_deltas(spec);
  const double rho = spec.rho;
  const double lam = spec.lambda;
  const double rl = rho * (1.0 - lam);

  // Switch times along the deterministic path; monotone thresholds give
  // monotone times.
  std::vector<long> t(A + 1, 0);
  for (int a = 1; a <= A; ++a) t[a] = switch_time(thresholds.thresholds[a - 1], lam);

  double total = rho * d.B_p / (1.0 - rho) +
                 lam * rho * d.A_p[0] / ((1.0 - rho) * (1.0 - rl));
  for (int a = 1; a <= A; ++a) {
    const double rp = std::pow(rho, static_cast<double>(t[a]));
    const double rlp = std::pow(rl, static_cast<double>(t[a]) + 1.0);
    total += rp * d.D_i[a] / (1.0 - rho);
    total += (rho * rp / (1.0 - rho) - rlp / (1.0 - rl)) * d.D_p[a];
  }
  return total;
}

double approx_cost_trajectory_oracle(const ProblemSpec& spec, const ThresholdPolicy& thresholds) {
  const int A = spec.num_actions;
  if (static_cast<int>(thresholds.thresholds.size()) != A)
    throw std::invalid_argument("trajectory oracle: threshold count must equal num_actions");
  for (double th : thresholds.thresholds)
    if (!(th >= 0.0 && th < 1.0))
      throw std::invalid_argument("trajectory oracle: thresholds must lie in [0,1)");

  CostDeltas d = cost_deltas(spec);
  double maxscale = std::abs(d.B_p) + spec.c_i[A];
  for (int a = 0; a <= A; ++a) maxscale = std::max(maxscale, std::abs(d.A_p[a]));
  maxscale = std::max(maxscale, 1.0);

  double total = 0.0;
  double disc = 1.0;
  double pi = 0.0;
  for (long t = 0;; ++t) {
    if (disc * maxscale < 1e-14) break;
    int a = 0;
    for (int lvl = A; lvl >= 1; --lvl) {
      if (thresholds.thresholds[lvl - 1] <= pi) {
        a = lvl;
        break;
      }
    }
    const double pnext = predict(pi, spec.lambda);
    // Level cost now; expected observation cost arrives one step later under
    // the post-decision distribution.
    total += disc * (spec.c_i[a] + spec.rho * (d.B_p + pnext * d.A_p[a]));
    disc *= spec.rho;
    pi = pnext;
  }
  return total;
}

}  // namespace qi
