#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>

#include "qi/grid_solver.hpp"
#include "qi/model.hpp"

namespace qi {

// Per-episode decision state. qcd_declared is the latch used by the QCD
// baselines; other policies ignore it.
struct PolicyState {
  double pi = 0.0;
  int level = 0;  // current intervention level
  bool qcd_declared = false;
  long t = 0;  // decision epoch, 0-based
};

// Realized episode quantities visible only to the oracle.
struct HiddenInfo {
  long change_point = 1;  // first post-change observation time, >= 1
  long horizon = 1;       // episode length T, >= 1
};

struct LowComplexityPolicy {
  ThresholdPolicy thresholds;
};

struct GridOptimalPolicy {
  std::shared_ptr<const GridSolution> solution;
};

// Shiryaev-style detector: idle until the posterior reaches h, then either
// ramp one level per step (direct=false) or jump straight to the top level
// (direct=true; deliberately exempt from the one-step escalation constraint).
struct QcdPolicy {
  double h = 0.9;
  bool direct = false;
};

// Clairvoyant reference: idles until one step before the change, holds the
// top level until the penultimate epoch, idles at the last one. Needs
// HiddenInfo at decision time; simulation-only and constraint-exempt.
struct OraclePolicy {};

struct FiniteHorizonPolicy {
  std::shared_ptr<const FiniteHorizonSolution> solution;
};

using PolicyKind = std::variant<LowComplexityPolicy, GridOptimalPolicy, QcdPolicy, OraclePolicy,
                                FiniteHorizonPolicy>;

// Closed-form escalation thresholds: the top level uses its exact switching
// belief, lower levels take min(own closed-form bound, threshold above),
// all clamped to [0,1].
ThresholdPolicy low_complexity_policy(const ProblemSpec& spec);

// Next intervention level for the given policy. In constrained mode the
// result is kept within {level, level+1} for the threshold and grid
// policies; QcdPolicy with direct=true and OraclePolicy escalate freely by
// design. Throws std::logic_error for OraclePolicy without hidden info.
int decide(const PolicyKind& kind, const PolicyState& state, bool constrained, int num_actions,
           const std::optional<HiddenInfo>& hidden = std::nullopt);

// Expected discounted cost of the oracle under the geometric horizon:
//   rho*B_p/(1-rho) + c_i[A]*(rho/(1-rho) - rho(1-lambda)/(1-rho(1-lambda))).
double oracle_cost_closed_form(const ProblemSpec& spec);

// Short table/CSV label: low, grid, qcd, dqcd, oracle, fhdp.
std::string policy_name(const PolicyKind& kind);

}  // namespace qi
