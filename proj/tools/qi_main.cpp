#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qi/grid_solver.hpp"
#include "qi/json_io.hpp"
#include "qi/local_approx.hpp"
#include "qi/model.hpp"
#include "qi/policies.hpp"
#include "qi/simulator.hpp"

namespace {

using nlohmann::json;

// Exit codes: 0 success, 1 spec failed validation, 2 malformed JSON or
// config, 3 runtime failure (e.g. solver non-convergence).
enum ExitCode { kOk = 0, kInvalidSpec = 1, kBadConfig = 2, kRuntime = 3 };

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  return json::parse(in);
}

qi::ProblemSpec spec_from_config(const json& cfg) {
  if (!cfg.contains("spec")) return qi::make_benchmark_family(0.02, 0.99, 0.03);
  const json& s = cfg.at("spec");
  if (s.is_object() && s.contains("family")) {
    const std::string family = s.at("family").get<std::string>();
    if (family != "benchmark") throw std::invalid_argument("unknown spec family: " + family);
    return qi::make_benchmark_family(s.value("delta", 0.02), s.value("rho", 0.99),
                                     s.value("lambda", 0.03));
  }
  return qi::spec_from_json(s);
}

qi::Strictness strictness_from_config(const json& cfg) {
  const std::string s = cfg.value("strictness", "strict");
  if (s == "strict") return qi::Strictness::Strict;
  if (s == "warn") return qi::Strictness::Warn;
  throw std::invalid_argument("unknown strictness: " + s);
}

qi::GridConfig grid_from_json(const json& j, qi::GridConfig base) {
  if (j.contains("num_cells")) base.num_cells = j.at("num_cells").get<int>();
  if (j.contains("representative")) {
    const std::string r = j.at("representative").get<std::string>();
    if (r == "midpoint")
      base.representative = qi::RepresentativeRule::CellMidpoint;
    else if (r == "left_edge")
      base.representative = qi::RepresentativeRule::CellLeftEdge;
    else
      throw std::invalid_argument("unknown representative rule: " + r);
  }
  if (j.contains("epsilon")) base.epsilon = j.at("epsilon").get<double>();
  if (j.contains("interpolation")) {
    const std::string s = j.at("interpolation").get<std::string>();
    if (s == "linear")
      base.interpolation = qi::Interpolation::Linear;
    else if (s == "nearest")
      base.interpolation = qi::Interpolation::NearestCell;
    else
      throw std::invalid_argument("unknown interpolation: " + s);
  }
  if (j.contains("max_sweeps")) base.max_sweeps = j.at("max_sweeps").get<long>();
  return base;
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + out_path);
  out << text;
}

// Log-spaced values, 20 points per decade, endpoints included.
std::vector<double> log_spaced(double lo, double hi) {
  std::vector<double> v;
  const double step = 1.0 / 20.0;
  for (double e = std::log10(lo); e < std::log10(hi) - 1e-9; e += step)
    v.push_back(std::pow(10.0, e));
  v.push_back(hi);
  return v;
}

// Fails the run (exit 1) when the spec does not validate at the requested
// strictness; prints the report so the reason is visible.
bool gate_validation(const qi::ProblemSpec& spec, qi::Strictness strictness) {
  const qi::ValidationReport rep = qi::validate_spec(spec, strictness);
  if (!rep.passed) std::cerr << qi::validation_to_json(rep).dump(2) << "\n";
  return rep.passed;
}

int cmd_validate(const json& cfg) {
  const qi::ProblemSpec spec = spec_from_config(cfg);
  const qi::ValidationReport rep = qi::validate_spec(spec, strictness_from_config(cfg));
  const qi::LocalRegimeReport regime = qi::local_regime_report(spec);
  json out = qi::validation_to_json(rep);
  out["delta_eff"] = regime.delta_eff;
  out["gamma_eff"] = regime.gamma_eff;
  std::cerr << out.dump(2) << "\n";
  return rep.passed ? kOk : kInvalidSpec;
}

int cmd_solve(const json& cfg, const std::string& out_path, std::optional<int> grid_n) {
  const qi::ProblemSpec spec = spec_from_config(cfg);
  if (!gate_validation(spec, strictness_from_config(cfg))) return kInvalidSpec;
  qi::GridConfig gc = grid_from_json(cfg.value("grid", json::object()), qi::GridConfig{});
  if (grid_n) gc.num_cells = *grid_n;
  const qi::GridSolution sol = qi::solve_grid(spec, gc);
  const qi::ThresholdExtraction th = qi::extract_thresholds(sol);
  json out{{"solution", qi::grid_solution_to_json(sol)},
           {"thresholds", qi::thresholds_to_json(th.thresholds)},
           {"monotonicity_violations", th.monotonicity_violations},
           {"top_level_value", qi::top_level_value(spec)}};
  emit(out_path, out.dump(2) + "\n");
  return kOk;
}

int cmd_approx(const json& cfg, const std::string& out_path, std::optional<int> grid_n) {
  const qi::ProblemSpec spec = spec_from_config(cfg);
  if (!gate_validation(spec, strictness_from_config(cfg))) return kInvalidSpec;
  qi::GridConfig gc =
      grid_from_json(cfg.value("approx_grid", json::object()), qi::approx_default_config());
  if (grid_n) gc.num_cells = *grid_n;
  const qi::ApproxSolution sol = qi::solve_approx(spec, gc);
  json out{{"solution", qi::approx_solution_to_json(sol)}};
  try {
    out["bounds"] = qi::threshold_bounds_to_json(qi::threshold_bounds(spec, qi::cost_deltas(spec)));
  } catch (const std::invalid_argument& e) {
    out["bounds"] = nullptr;
    out["bounds_error"] = e.what();
  }
  try {
    out["approx_total_cost"] = qi::approx_total_cost(spec, sol.thresholds);
  } catch (const std::invalid_argument&) {
    out["approx_total_cost"] = nullptr;  // some threshold never fires
  }
  emit(out_path, out.dump(2) + "\n");
  return kOk;
}

int cmd_thresholds(const json& cfg, const std::string& out_path) {
  const qi::ProblemSpec spec = spec_from_config(cfg);
  if (!gate_validation(spec, strictness_from_config(cfg))) return kInvalidSpec;
  const qi::ThresholdPolicy policy = qi::low_complexity_policy(spec);
  json switch_times = json::array();
  for (double th : policy.thresholds) {
    if (th >= 0.0 && th < 1.0)
      switch_times.push_back(qi::switch_time(th, spec.lambda));
    else
      switch_times.push_back(nullptr);
  }
  json out{{"thresholds", qi::thresholds_to_json(policy)},
           {"bounds", qi::threshold_bounds_to_json(qi::threshold_bounds(spec, qi::cost_deltas(spec)))},
           {"switch_times", switch_times}};
  try {
    out["approx_total_cost"] = qi::approx_total_cost(spec, policy);
  } catch (const std::invalid_argument&) {
    out["approx_total_cost"] = nullptr;
  }
  emit(out_path, out.dump(2) + "\n");
  return kOk;
}

qi::SimOptions sim_from_config(const json& cfg, std::optional<std::uint64_t> seed,
                               std::optional<long> runs, bool unconstrained) {
  qi::SimOptions so;
  const json sim = cfg.value("sim", json::object());
  if (sim.contains("fixed_horizon") && !sim.at("fixed_horizon").is_null())
    so.fixed_horizon = sim.at("fixed_horizon").get<long>();
  so.constrained = sim.value("constrained", true);
  so.n_runs = sim.value("runs", 20000L);
  so.seed = sim.value("seed", std::uint64_t{0});
  if (seed) so.seed = *seed;
  if (runs) so.n_runs = *runs;
  if (unconstrained) so.constrained = false;
  return so;
}

int cmd_simulate(const json& cfg, const std::string& out_path, std::optional<std::uint64_t> seed,
                 std::optional<long> runs, bool unconstrained, std::optional<int> grid_n) {
  const qi::ProblemSpec spec = spec_from_config(cfg);
  if (!gate_validation(spec, strictness_from_config(cfg))) return kInvalidSpec;
  const qi::SimOptions so = sim_from_config(cfg, seed, runs, unconstrained);
  const std::string name = cfg.value("policy", "low");
  const json qcd = cfg.value("qcd", json::object());

  json out;
  if ((name == "qcd" || name == "dqcd") && qcd.value("tune", false)) {
    std::vector<double> h_grid = qcd.value("h_grid", qi::default_h_grid());
    const qi::QcdTuning tuned = qi::tune_qcd(spec, name == "dqcd", h_grid, so);
    out = qi::report_to_json(tuned.report);
    out["best_h"] = tuned.best_h;
  } else {
    qi::PolicyKind kind;
    if (name == "low") {
      kind = qi::LowComplexityPolicy{qi::low_complexity_policy(spec)};
    } else if (name == "grid") {
      qi::GridConfig gc = grid_from_json(cfg.value("grid", json::object()), qi::GridConfig{});
      if (grid_n) gc.num_cells = *grid_n;
      kind = qi::GridOptimalPolicy{
          std::make_shared<const qi::GridSolution>(qi::solve_grid(spec, gc))};
    } else if (name == "qcd" || name == "dqcd") {
      kind = qi::QcdPolicy{qcd.value("h", 0.9), name == "dqcd"};
    } else if (name == "oracle") {
      kind = qi::OraclePolicy{};
    } else {
      throw std::invalid_argument("unknown policy: " + name);
    }
    out = qi::report_to_json(qi::estimate_cost(spec, kind, so));
  }
  out["policy"] = name;
  emit(out_path, out.dump(2) + "\n");
  return kOk;
}

int cmd_sweep(const json& cfg, const std::string& out_path, std::optional<std::uint64_t> seed,
              std::optional<long> runs, bool unconstrained, std::optional<int> grid_n) {
  const json sw = cfg.value("sweep", json::object());
  const std::string kind_name = sw.value("kind", "rho");

  qi::SweepKind kind;
  std::vector<double> values;
  qi::SweepOptions opts;
  if (kind_name == "rho") {
    kind = qi::SweepKind::Rho;
    opts.base.delta = 0.02;
    opts.base.lambda = 0.1;
    if (sw.contains("values")) {
      values = sw.at("values").get<std::vector<double>>();
    } else {
      for (double x : log_spaced(1e-4, 1.0)) values.push_back(1.0 - x);
    }
  } else if (kind_name == "lambda") {
    kind = qi::SweepKind::Lambda;
    opts.base.rho = 0.95;
    opts.base.delta = 0.2;  // protocol value; clamped below
    values = sw.contains("values") ? sw.at("values").get<std::vector<double>>()
                                   : log_spaced(1e-4, 1.0);
  } else if (kind_name == "delta") {
    kind = qi::SweepKind::Delta;
    opts.base.rho = 0.95;
    opts.base.lambda = 0.1;
    values = sw.contains("values") ? sw.at("values").get<std::vector<double>>()
                                   : log_spaced(1e-4, 0.03);
  } else {
    throw std::invalid_argument("unknown sweep kind: " + kind_name);
  }

  if (sw.contains("base")) {
    const json& b = sw.at("base");
    opts.base.delta = b.value("delta", opts.base.delta);
    opts.base.rho = b.value("rho", opts.base.rho);
    opts.base.lambda = b.value("lambda", opts.base.lambda);
  }
  if (opts.base.delta > 0.03) {
    std::cerr << "warning: base delta " << opts.base.delta
              << " exceeds the benchmark family's range; clamped to 0.03\n";
    opts.base.delta = 0.03;
  }
  if (sw.contains("policies")) opts.policies = sw.at("policies").get<std::vector<std::string>>();
  const json qcd = cfg.value("qcd", json::object());
  if (qcd.contains("h_grid")) opts.h_grid = qcd.at("h_grid").get<std::vector<double>>();
  opts.grid = grid_from_json(cfg.value("grid", json::object()), opts.grid);
  if (grid_n) opts.grid.num_cells = *grid_n;

  const qi::SimOptions so = sim_from_config(cfg, seed, runs, unconstrained);
  opts.n_runs = so.n_runs;
  opts.seed = so.seed;
  opts.constrained = so.constrained;

  std::ostringstream csv;
  qi::write_csv(csv, qi::regret_sweep(kind, values, opts));
  emit(out_path, csv.str());
  return kOk;
}

int cmd_anomaly(const json& cfg, const std::string& out_path, std::optional<std::uint64_t> seed,
                std::optional<long> runs, std::optional<int> grid_n) {
  qi::AnomalyOptions opts;
  const json an = cfg.value("anomaly", json::object());
  if (an.contains("lambdas")) opts.lambdas = an.at("lambdas").get<std::vector<double>>();
  opts.delta = an.value("delta", opts.delta);
  opts.policy_rho = an.value("policy_rho", opts.policy_rho);
  opts.fixed_horizon = an.value("fixed_horizon", opts.fixed_horizon);
  opts.n_runs = an.value("runs", opts.n_runs);
  opts.seed = an.value("seed", opts.seed);
  opts.fixed_h = an.value("fixed_h", opts.fixed_h);
  if (an.contains("h_grid")) opts.h_grid = an.at("h_grid").get<std::vector<double>>();
  opts.grid = grid_from_json(cfg.value("grid", json::object()), opts.grid);
  if (grid_n) opts.grid.num_cells = *grid_n;
  if (seed) opts.seed = *seed;
  if (runs) opts.n_runs = *runs;

  std::ostringstream csv;
  qi::write_csv(csv, qi::anomaly_experiment(opts));
  emit(out_path, csv.str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Change-point intervention: solvers, threshold policies, and experiment harness"};
  app.fallthrough();
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<long> runs;
  std::optional<int> grid_n;
  bool unconstrained = false;
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--seed", seed, "Master RNG seed (overrides config)");
  app.add_option("--out", out_path, "Output file (default: stdout)");
  app.add_option("--runs", runs, "Monte Carlo episodes (overrides config)");
  app.add_option("--grid-n", grid_n, "Grid cell count (overrides config)");
  app.add_flag("--unconstrained", unconstrained, "Drop the one-step escalation constraint");

  auto* c_validate = app.add_subcommand("validate", "Check a problem spec and report diagnostics");
  auto* c_solve = app.add_subcommand("solve", "Grid value iteration for the exact model");
  auto* c_approx = app.add_subcommand("approx", "Drift-only approximate solution and bounds");
  auto* c_thresholds = app.add_subcommand("thresholds", "Closed-form low-complexity thresholds");
  auto* c_simulate = app.add_subcommand("simulate", "Monte Carlo cost of one policy");
  auto* c_sweep = app.add_subcommand("sweep", "Regret sweep over rho, lambda, or delta (CSV)");
  auto* c_anomaly = app.add_subcommand("anomaly", "Fixed-horizon policy comparison (CSV)");

  CLI11_PARSE(app, argc, argv);

  try {
    const nlohmann::json cfg = load_config(config_path);
    if (c_validate->parsed()) return cmd_validate(cfg);
    if (c_solve->parsed()) return cmd_solve(cfg, out_path, grid_n);
    if (c_approx->parsed()) return cmd_approx(cfg, out_path, grid_n);
    if (c_thresholds->parsed()) return cmd_thresholds(cfg, out_path);
    if (c_simulate->parsed())
      return cmd_simulate(cfg, out_path, seed, runs, unconstrained, grid_n);
    if (c_sweep->parsed()) return cmd_sweep(cfg, out_path, seed, runs, unconstrained, grid_n);
    if (c_anomaly->parsed()) return cmd_anomaly(cfg, out_path, seed, runs, grid_n);
    std::cerr << "no subcommand given\n";
    return kBadConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kBadConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kBadConfig;
  } catch (const qi::ConvergenceError& e) {
    std::cerr << "solver did not converge: " << e.what()
              << " (residual " << e.final_residual << " after " << e.sweeps << " sweeps)\n";
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
}
