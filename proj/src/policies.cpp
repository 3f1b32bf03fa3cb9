#include "qi/policies.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qi/local_approx.hpp"

namespace qi {

namespace {

// Containing-cell lookup used for table policies; actions are discrete so no
// interpolation.
int cell_of(double pi, int num_cells) {
  int cell = static_cast<int>(std::floor(pi * num_cells));
  return std::clamp(cell, 0, num_cells - 1);
}

int threshold_target(const std::vector<double>& thresholds, double pi) {
  int target = 0;
  for (int a = static_cast<int>(thresholds.size()); a >= 1; --a) {
    if (thresholds[a - 1] <= pi) {
      target = a;
      break;
    }
  }
  return target;
}

}  // namespace

ThresholdPolicy low_complexity_policy(const ProblemSpec& spec) {
  const int A = spec.num_actions;
  const ThresholdBounds b = threshold_bounds(spec, cost_deltas(spec));
  ThresholdPolicy p;
  p.thresholds.assign(A, 1.0);
  double cap = 1.0;
  for (int a = A; a >= 1; --a) {
    cap = std::min(b.upper_raw[a], cap);
    p.thresholds[a - 1] = std::clamp(cap, 0.0, 1.0);
  }
  return p;
}

int decide(const PolicyKind& kind, const PolicyState& state, bool constrained, int num_actions,
           const std::optional<HiddenInfo>& hidden) {
  const int A = num_actions;

  if (const auto* p = std::get_if<LowComplexityPolicy>(&kind)) {
    const int target = threshold_target(p->thresholds.thresholds, state.pi);
    if (!constrained) return target;
    return std::clamp(target, state.level, std::min(state.level + 1, A));
  }
  if (const auto* p = std::get_if<GridOptimalPolicy>(&kind)) {
    const GridSolution& sol = *p->solution;
    return sol.policy[state.level][cell_of(state.pi, sol.config.num_cells)];
  }
  if (const auto* p = std::get_if<QcdPolicy>(&kind)) {
    if (!(p->h > 0.0 && p->h < 1.0))
      throw std::invalid_argument("qcd declare threshold must lie in (0,1)");
    const bool declared = state.qcd_declared || state.pi >= p->h;
    if (!declared) return state.level;
    if (p->direct) return A;
    return std::min(state.level + 1, A);
  }
  if (std::get_if<OraclePolicy>(&kind)) {
    if (!hidden)
      throw std::logic_error("oracle policy needs the realized change point and horizon");
    const long tau = hidden->change_point;
    const long T = hidden->horizon;
    return (state.t >= tau - 1 && state.t <= T - 2) ? A : 0;
  }
  if (const auto* p = std::get_if<FiniteHorizonPolicy>(&kind)) {
    const FiniteHorizonSolution& sol = *p->solution;
    const long t = std::min<long>(state.t, sol.horizon - 1);
    return sol.policy[t][state.level][cell_of(state.pi, sol.config.num_cells)];
  }
  throw std::logic_error("unhandled policy kind");
}

double oracle_cost_closed_form(const ProblemSpec& spec) {
  const double rho = spec.rho;
  const double lam = spec.lambda;
  double bp = 0.0;
  for (int z = 0; z < spec.num_obs; ++z) bp += spec.alpha[z] * spec.c_p[z];
  const double hold = rho / (1.0 - rho) - rho * (1.0 - lam) / (1.0 - rho * (1.0 - lam));
  return rho * bp / (1.0 - rho) + spec.c_i[spec.num_actions] * hold;
}

std::string policy_name(const PolicyKind& kind) {
  if (std::get_if<LowComplexityPolicy>(&kind)) return "low";
  if (std::get_if<GridOptimalPolicy>(&kind)) return "grid";
  if (const auto* p = std::get_if<QcdPolicy>(&kind)) return p->direct ? "dqcd" : "qcd";
  if (std::get_if<OraclePolicy>(&kind)) return "oracle";
  return "fhdp";
}

}  // namespace qi
