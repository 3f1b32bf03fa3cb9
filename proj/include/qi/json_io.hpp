#pragma once

#include "json.hpp"
#include "qi/grid_solver.hpp"
#include "qi/local_approx.hpp"
#include "qi/model.hpp"
#include "qi/simulator.hpp"

namespace qi {

// Problem documents use exactly the keys
//   "Z", "A", "alpha", "betas", "c_p", "c_i", "rho", "lambda"
// with "betas" an (A+1) x Z array ordered by action. Loading renormalizes
// rows whose sums are within the probability tolerance and rejects unknown
// keys; structural validation beyond shapes is validate_spec's job.
nlohmann::json spec_to_json(const ProblemSpec& spec);
ProblemSpec spec_from_json(const nlohmann::json& j);

nlohmann::json validation_to_json(const ValidationReport& report);

// {"grid":[...], "J":[[...]], "V":[[...]], "policy":[[...]], "residual":r, "sweeps":k}
nlohmann::json grid_solution_to_json(const GridSolution& sol);

// Threshold arrays are indexed by escalation level 1..A; a level that never
// fires serializes as null.
nlohmann::json thresholds_to_json(const ThresholdPolicy& policy);
nlohmann::json approx_solution_to_json(const ApproxSolution& sol, bool include_tables = false);
nlohmann::json threshold_bounds_to_json(const ThresholdBounds& bounds);

nlohmann::json report_to_json(const CostReport& report);

}  // namespace qi
