#include "qi/grid_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qi/belief.hpp"
#include "qi/util.hpp"

namespace qi {

std::vector<double> make_grid(const GridConfig& cfg) {
  const int n = cfg.num_cells;
  if (n < 2) throw std::invalid_argument("grid needs at least 2 cells");
  std::vector<double> grid(n);
  const double offset = cfg.representative == RepresentativeRule::CellMidpoint ? 0.5 : 0.0;
  for (int j = 0; j < n; ++j) grid[j] = (j + offset) / n;
  return grid;
}

Loc locate(const std::vector<double>& grid, double x, Interpolation interp, int num_cells) {
  const int n = static_cast<int>(grid.size());
  if (interp == Interpolation::NearestCell) {
    int cell = static_cast<int>(std::floor(x * num_cells));
    cell = std::clamp(cell, 0, n - 1);
    return cell == n - 1 ? Loc{n - 2, 1.0} : Loc{cell, 0.0};
  }
  if (x <= grid.front()) return {0, 0.0};
  if (x >= grid.back()) return {n - 2, 1.0};
  const auto it = std::upper_bound(grid.begin(), grid.end(), x);
  const int i = static_cast<int>(it - grid.begin()) - 1;
  return {i, (x - grid[i]) / (grid[i + 1] - grid[i])};
}

namespace {

// Per (level, grid point, observation) data reused every sweep.
struct Edge {
  double sigma;  // observation probability under the predicted belief
  Loc next;      // where the posterior lands on the grid
};

void check_shapes(const ProblemSpec& spec) {
  const auto Z = static_cast<std::size_t>(spec.num_obs);
  const auto A1 = static_cast<std::size_t>(spec.num_actions) + 1;
  bool ok = spec.num_obs >= 1 && spec.num_actions >= 0 && spec.alpha.size() == Z &&
            spec.c_p.size() == Z && spec.betas.size() == A1 && spec.c_i.size() == A1;
  if (ok) {
    for (const auto& row : spec.betas) ok = ok && row.size() == Z;
  }
  if (!ok) throw std::invalid_argument("spec arrays are inconsistent with Z/A");
}

std::vector<std::vector<std::vector<Edge>>> precompute_edges(const ProblemSpec& spec,
                                                             const std::vector<double>& grid,
                                                             const GridConfig& cfg) {
  const int A = spec.num_actions;
  const int Z = spec.num_obs;
  const int N = static_cast<int>(grid.size());
  std::vector<std::vector<std::vector<Edge>>> edges(
      A + 1, std::vector<std::vector<Edge>>(N, std::vector<Edge>(Z)));
  for (int a = 0; a <= A; ++a) {
    for (int j = 0; j < N; ++j) {
      const double pit = predict(grid[j], spec.lambda);
      for (int z = 0; z < Z; ++z) {
        const double num = pit * spec.betas[a][z];
        const double sigma = num + (1.0 - pit) * spec.alpha[z];
        const double next = num / sigma;
        edges[a][j][z] = {sigma, locate(grid, next, cfg.interpolation, cfg.num_cells)};
      }
    }
  }
  return edges;
}

}  // namespace

double top_level_value(const ProblemSpec& spec) {
  double bp = 0.0;
  for (int z = 0; z < spec.num_obs; ++z) bp += spec.alpha[z] * spec.c_p[z];
  return (spec.c_i[spec.num_actions] + spec.rho * bp) / (1.0 - spec.rho);
}

GridSolution solve_grid(const ProblemSpec& spec, const GridConfig& cfg) {
  check_shapes(spec);
  const int A = spec.num_actions;
  const int Z = spec.num_obs;
  const int N = cfg.num_cells;

  GridSolution sol;
  sol.config = cfg;
  sol.grid = make_grid(cfg);
  const auto edges = precompute_edges(spec, sol.grid, cfg);

  std::vector<std::vector<double>> V(A + 1, std::vector<double>(N, 0.0));
  std::vector<std::vector<double>> Vnew = V, J = V;
  std::vector<std::vector<int>> policy(A + 1, std::vector<int>(N, 0));

  const int workers = worker_count();
  double residual = std::numeric_limits<double>::infinity();
  long sweeps = 0;
  constexpr int kHistory = 32;

  while (sweeps < cfg.max_sweeps) {
    // J from the previous V tables.
    for (int a = 0; a <= A; ++a) {
      const auto& row_edges = edges[a];
      const auto& cont = V[a];
      auto& out = J[a];
      parallel_for(N, workers, [&](long lo, long hi) {
        for (long j = lo; j < hi; ++j) {
          double acc = 0.0;
          for (int z = 0; z < Z; ++z) {
            const Edge& e = row_edges[j][z];
            acc += e.sigma * (spec.c_p[z] + read(cont, e.next));
          }
          out[j] = spec.c_i[a] + spec.rho * acc;
        }
      });
    }
    // V from the new J, then the sup-norm change in one sequential pass.
    for (int at = 0; at <= A; ++at) {
      const int up = std::min(at + 1, A);
      parallel_for(N, workers, [&](long lo, long hi) {
        for (long j = lo; j < hi; ++j) {
          const double stay = J[at][j];
          const double step = J[up][j];
          Vnew[at][j] = std::min(stay, step);
          policy[at][j] = step < stay ? up : at;
        }
      });
    }
    residual = 0.0;
    for (int at = 0; at <= A; ++at) {
      for (int j = 0; j < N; ++j) {
        residual = std::max(residual, std::abs(Vnew[at][j] - V[at][j]));
      }
    }
    V.swap(Vnew);
    ++sweeps;
    sol.residual_history.push_back(residual);
    if (sol.residual_history.size() > kHistory) {
      sol.residual_history.erase(sol.residual_history.begin());
    }
    if (residual <= cfg.epsilon) {
      sol.J = std::move(J);
      sol.V = std::move(V);
      sol.policy = std::move(policy);
      sol.sweeps_used = sweeps;
      sol.final_residual = residual;
      return sol;
    }
  }
  throw ConvergenceError("value iteration did not converge within max_sweeps", residual, sweeps);
}

double eval_value(const GridSolution& sol, double pi, int a_tilde) {
  const Loc loc = locate(sol.grid, pi, sol.config.interpolation, sol.config.num_cells);
  return read(sol.V[a_tilde], loc);
}

ThresholdExtraction extract_thresholds(const GridSolution& sol) {
  const int A = static_cast<int>(sol.V.size()) - 1;
  ThresholdExtraction out;
  out.thresholds.thresholds.assign(A, ThresholdPolicy::kNever);
  for (int a = 1; a <= A; ++a) {
    const auto& row = sol.policy[a - 1];
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j] == a) {
        out.thresholds.thresholds[a - 1] = sol.grid[j];
        break;
      }
    }
  }
  double running = 0.0;
  for (int a = 0; a < A; ++a) {
    double& t = out.thresholds.thresholds[a];
    if (t < running) {
      ++out.monotonicity_violations;
      t = running;
    }
    running = t;
  }
  return out;
}

FiniteHorizonSolution solve_finite_horizon(const ProblemSpec& spec, int horizon,
                                           const GridConfig& cfg, bool constrained) {
  check_shapes(spec);
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  const int A = spec.num_actions;
  const int Z = spec.num_obs;
  const int N = cfg.num_cells;

  FiniteHorizonSolution sol;
  sol.horizon = horizon;
  sol.constrained = constrained;
  sol.config = cfg;
  sol.grid = make_grid(cfg);
  const auto edges = precompute_edges(spec, sol.grid, cfg);

  sol.values.assign(horizon, std::vector<std::vector<double>>(A + 1, std::vector<double>(N, 0.0)));
  sol.policy.assign(horizon, std::vector<std::vector<int>>(A + 1, std::vector<int>(N, 0)));

  auto action_range = [&](int at) {
    std::vector<int> acts;
    if (constrained) {
      acts.push_back(at);
      if (at < A) acts.push_back(at + 1);
    } else {
      for (int a = 0; a <= A; ++a) acts.push_back(a);
    }
    return acts;
  };

  // Final epoch: no observation follows, only the intervention cost.
  for (int at = 0; at <= A; ++at) {
    double best = std::numeric_limits<double>::infinity();
    int best_a = at;
    for (int a : action_range(at)) {
      if (spec.c_i[a] < best) {
        best = spec.c_i[a];
        best_a = a;
      }
    }
    std::fill(sol.values[horizon - 1][at].begin(), sol.values[horizon - 1][at].end(), best);
    std::fill(sol.policy[horizon - 1][at].begin(), sol.policy[horizon - 1][at].end(), best_a);
  }

  const int workers = worker_count();
  for (int t = horizon - 2; t >= 0; --t) {
    const auto& next = sol.values[t + 1];
    for (int at = 0; at <= A; ++at) {
      const auto acts = action_range(at);
      parallel_for(N, workers, [&](long lo, long hi) {
        for (long j = lo; j < hi; ++j) {
          double best = std::numeric_limits<double>::infinity();
          int best_a = acts.front();
          for (int a : acts) {
            double acc = 0.0;
            for (int z = 0; z < Z; ++z) {
              const Edge& e = edges[a][j][z];
              acc += e.sigma * (spec.c_p[z] + read(next[a], e.next));
            }
            const double total = spec.c_i[a] + acc;
            if (total < best) {
              best = total;
              best_a = a;
            }
          }
          sol.values[t][at][j] = best;
          sol.policy[t][at][j] = best_a;
        }
      });
    }
  }
  return sol;
}

}  // namespace qi
