#include "qi/json_io.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qi {

using nlohmann::json;

json spec_to_json(const ProblemSpec& spec) {
  return json{{"Z", spec.num_obs},   {"A", spec.num_actions}, {"alpha", spec.alpha},
              {"betas", spec.betas}, {"c_p", spec.c_p},       {"c_i", spec.c_i},
              {"rho", spec.rho},     {"lambda", spec.lambda}};
}

ProblemSpec spec_from_json(const json& j) {
  static const char* const kKeys[] = {"Z", "A", "alpha", "betas", "c_p", "c_i", "rho", "lambda"};
  if (!j.is_object()) throw std::invalid_argument("problem spec must be a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : kKeys) known = known || item.key() == k;
    if (!known) throw std::invalid_argument("unknown problem-spec key: " + item.key());
  }
  ProblemSpec spec;
  spec.num_obs = j.at("Z").get<int>();
  spec.num_actions = j.at("A").get<int>();
  spec.alpha = j.at("alpha").get<std::vector<double>>();
  spec.betas = j.at("betas").get<std::vector<std::vector<double>>>();
  spec.c_p = j.at("c_p").get<std::vector<double>>();
  spec.c_i = j.at("c_i").get<std::vector<double>>();
  spec.rho = j.at("rho").get<double>();
  spec.lambda = j.at("lambda").get<double>();
  renormalize_in_tolerance(spec);
  return spec;
}

json validation_to_json(const ValidationReport& report) {
  json violations = json::array();
  for (const Violation& v : report.violations) {
    violations.push_back(json{{"rule", v.rule},
                              {"message", v.message},
                              {"indices", v.indices},
                              {"margin", v.margin},
                              {"fatal", v.fatal}});
  }
  return json{{"passed", report.passed}, {"violations", violations}};
}

json grid_solution_to_json(const GridSolution& sol) {
  return json{{"grid", sol.grid},     {"J", sol.J},
              {"V", sol.V},           {"policy", sol.policy},
              {"residual", sol.final_residual}, {"sweeps", sol.sweeps_used}};
}

json thresholds_to_json(const ThresholdPolicy& policy) {
  json arr = json::array();
  for (double th : policy.thresholds) {
    if (std::isfinite(th))
      arr.push_back(th);
    else
      arr.push_back(nullptr);
  }
  return arr;
}

json approx_solution_to_json(const ApproxSolution& sol, bool include_tables) {
  json j{{"thresholds", thresholds_to_json(sol.thresholds)},
         {"value_at_zero", sol.value_at_zero},
         {"residual", sol.final_residual},
         {"sweeps", sol.sweeps_used},
         {"monotonicity_violations", sol.monotonicity_violations}};
  if (include_tables) {
    j["grid"] = sol.grid;
    j["V"] = sol.V;
  }
  return j;
}

json threshold_bounds_to_json(const ThresholdBounds& bounds) {
  // Drop the unused slot 0; arrays are indexed by level 1..A.
  auto tail = [](const std::vector<double>& v) {
    return std::vector<double>(v.begin() + 1, v.end());
  };
  return json{{"lower", tail(bounds.lower)},
              {"upper", tail(bounds.upper)},
              {"lower_raw", tail(bounds.lower_raw)},
              {"upper_raw", tail(bounds.upper_raw)},
              {"inverted", bounds.inverted}};
}

json report_to_json(const CostReport& report) {
  return json{{"n_runs", report.n_runs}, {"mean_cost", report.mean_cost},
              {"std_err", report.std_err}, {"ci_lo", report.ci_lo},
              {"ci_hi", report.ci_hi},     {"regret", report.regret},
              {"seed", report.seed}};
}

}  // namespace qi
