#include "qi/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <variant>

#include "qi/belief.hpp"
#include "qi/local_approx.hpp"
#include "qi/rng.hpp"
#include "qi/util.hpp"

namespace qi {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct EpisodeCore {
  double cost = 0.0;
  long T = 0;
  long tau = 0;
};

template <bool Record>
EpisodeCore episode_impl(const ProblemSpec& spec, const PolicyKind& kind, const SimOptions& opts,
                         std::uint64_t episode, EpisodeResult* rec) {
  const int A = spec.num_actions;
  const long T = opts.fixed_horizon
                     ? *opts.fixed_horizon
                     : sample_geometric(
                           make_stream(opts.seed, episode, StreamPurpose::Horizon).next_unit(),
                           1.0 - spec.rho);
  const long tau = sample_geometric(
      make_stream(opts.seed, episode, StreamPurpose::ChangePoint).next_unit(), spec.lambda);
  RngStream obs = make_stream(opts.seed, episode, StreamPurpose::Observation);

  const bool is_oracle = std::holds_alternative<OraclePolicy>(kind);
  const std::optional<HiddenInfo> hidden =
      is_oracle ? std::optional<HiddenInfo>(HiddenInfo{tau, T}) : std::nullopt;
  const QcdPolicy* qcd = std::get_if<QcdPolicy>(&kind);

  PolicyState st;  // pi = 0, level 0, epoch 0
  int prev = decide(kind, st, opts.constrained, A, hidden);
  st.level = prev;
  double cost = spec.c_i[prev];
  if constexpr (Record) rec->actions.push_back(prev);

  for (long t = 1; t < T; ++t) {
    const int z = sample_categorical(obs.next_unit(), t < tau ? spec.alpha : spec.betas[prev]);
    st.pi = update(spec, st.pi, prev, z);
    if (qcd && st.pi >= qcd->h) st.qcd_declared = true;
    st.t = t;
    const int a = decide(kind, st, opts.constrained, A, hidden);
    st.level = a;
    cost += spec.c_p[z] + spec.c_i[a];
    prev = a;
    if constexpr (Record) {
      rec->actions.push_back(a);
      rec->observations.push_back(z);
    }
  }
  return {cost, T, tau};
}

SweepRow report_row(const std::string& param_name, double param_value, double kl,
                    const std::string& policy, const CostReport& r) {
  SweepRow row;
  row.param_name = param_name;
  row.param_value = param_value;
  row.kl_alpha_beta0 = kl;
  row.policy = policy;
  row.n_runs = r.n_runs;
  row.mean_cost = r.mean_cost;
  row.std_err = r.std_err;
  row.ci_lo = r.ci_lo;
  row.ci_hi = r.ci_hi;
  row.regret = r.regret;
  row.seed = r.seed;
  return row;
}

SweepRow nan_row(const std::string& param_name, double param_value, double kl,
                 const std::string& policy, std::uint64_t seed) {
  SweepRow row;
  row.param_name = param_name;
  row.param_value = param_value;
  row.kl_alpha_beta0 = kl;
  row.policy = policy;
  row.n_runs = 0;
  row.mean_cost = row.std_err = row.ci_lo = row.ci_hi = row.regret = kNan;
  row.seed = seed;
  return row;
}

}  // namespace

EpisodeResult run_episode(const ProblemSpec& spec, const PolicyKind& kind, const SimOptions& opts,
                          std::uint64_t episode) {
  EpisodeResult rec;
  const EpisodeCore core = episode_impl<true>(spec, kind, opts, episode, &rec);
  rec.hidden_T = core.T;
  rec.hidden_tau = core.tau;
  rec.total_cost = core.cost;
  return rec;
}

CostReport estimate_cost(const ProblemSpec& spec, const PolicyKind& kind, const SimOptions& opts) {
  if (opts.n_runs < 1) throw std::invalid_argument("estimate_cost: n_runs must be >= 1");
  const long n = opts.n_runs;
  std::vector<double> costs(n);
  parallel_for(n, worker_count(), [&](long lo, long hi) {
    for (long i = lo; i < hi; ++i)
      costs[i] = episode_impl<false>(spec, kind, opts, static_cast<std::uint64_t>(i), nullptr).cost;
  });

  // Ordered Welford pass; the summation order never depends on threading.
  double mean = 0.0, m2 = 0.0;
  for (long i = 0; i < n; ++i) {
    const double d = costs[i] - mean;
    mean += d / static_cast<double>(i + 1);
    m2 += d * (costs[i] - mean);
  }
  CostReport r;
  r.n_runs = n;
  r.mean_cost = mean;
  r.std_err = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
  r.ci_lo = mean - 1.96 * r.std_err;
  r.ci_hi = mean + 1.96 * r.std_err;
  r.regret = mean - oracle_cost_closed_form(spec);
  r.seed = opts.seed;
  return r;
}

QcdTuning tune_qcd(const ProblemSpec& spec, bool direct, const std::vector<double>& h_grid,
                   const SimOptions& opts) {
  if (h_grid.empty()) throw std::invalid_argument("tune_qcd: h_grid must be nonempty");
  QcdTuning best;
  bool have = false;
  for (double h : h_grid) {
    if (!(h > 0.0 && h < 1.0))
      throw std::invalid_argument("tune_qcd: declare thresholds must lie in (0,1)");
    const CostReport r = estimate_cost(spec, PolicyKind(QcdPolicy{h, direct}), opts);
    const bool better = !have || r.mean_cost < best.report.mean_cost ||
                        (r.mean_cost == best.report.mean_cost && h < best.best_h);
    if (better) {
      best.best_h = h;
      best.report = r;
      have = true;
    }
  }
  return best;
}

std::vector<double> default_h_grid() {
  std::vector<double> h(25);
  for (int i = 0; i < 25; ++i) h[i] = 0.05 + (0.95 - 0.05) * i / 24.0;
  return h;
}

std::vector<SweepRow> regret_sweep(SweepKind kind, const std::vector<double>& values,
                                   const SweepOptions& opts) {
  std::vector<SweepRow> rows;
  for (double value : values) {
    double delta = opts.base.delta;
    double rho = opts.base.rho;
    double lambda = opts.base.lambda;
    std::string param_name;
    double param_value = value;
    switch (kind) {
      case SweepKind::Rho:
        rho = std::clamp(value, 1e-9, 1.0 - 1e-9);
        param_name = "one_minus_rho";
        param_value = 1.0 - rho;
        break;
      case SweepKind::Lambda:
        lambda = value;
        param_name = "lambda";
        break;
      case SweepKind::Delta:
        delta = value;
        param_name = "delta";
        break;
    }

    auto emit_all_nan = [&](double kl) {
      for (const std::string& p : opts.policies)
        rows.push_back(nan_row(param_name, param_value, kl, p, opts.seed));
      rows.push_back(nan_row(param_name, param_value, kl, "approx", opts.seed));
    };

    ProblemSpec spec;
    try {
      spec = make_benchmark_family(delta, rho, lambda);
    } catch (const std::exception&) {
      emit_all_nan(kNan);
      continue;
    }
    const double kl = kl_divergence(spec.alpha, spec.betas[0]);

    SimOptions so;
    so.constrained = opts.constrained;
    so.n_runs = opts.n_runs;
    so.seed = opts.seed;

    for (const std::string& name : opts.policies) {
      try {
        if (name == "low") {
          PolicyKind p{LowComplexityPolicy{low_complexity_policy(spec)}};
          rows.push_back(report_row(param_name, param_value, kl, name, estimate_cost(spec, p, so)));
        } else if (name == "grid") {
          auto sol = std::make_shared<const GridSolution>(solve_grid(spec, opts.grid));
          PolicyKind p{GridOptimalPolicy{sol}};
          rows.push_back(report_row(param_name, param_value, kl, name, estimate_cost(spec, p, so)));
        } else if (name == "qcd") {
          rows.push_back(
              report_row(param_name, param_value, kl, name, tune_qcd(spec, false, opts.h_grid, so).report));
        } else if (name == "dqcd") {
          rows.push_back(
              report_row(param_name, param_value, kl, name, tune_qcd(spec, true, opts.h_grid, so).report));
        } else if (name == "oracle") {
          PolicyKind p{OraclePolicy{}};
          rows.push_back(report_row(param_name, param_value, kl, name, estimate_cost(spec, p, so)));
        } else {
          throw std::invalid_argument("regret_sweep: unknown policy '" + name + "'");
        }
      } catch (const ConvergenceError&) {
        rows.push_back(nan_row(param_name, param_value, kl, name, opts.seed));
      } catch (const std::invalid_argument&) {
        rows.push_back(nan_row(param_name, param_value, kl, name, opts.seed));
      }
    }

    // Analytic drift-model cost of the low-complexity thresholds. Thresholds
    // clamped to 1 make it undefined; that is a nan row, not a failure.
    try {
      const ThresholdPolicy th = low_complexity_policy(spec);
      const double ctilde = approx_total_cost(spec, th);
      CostReport r;
      r.n_runs = 0;
      r.mean_cost = ctilde;
      r.std_err = 0.0;
      r.ci_lo = r.ci_hi = ctilde;
      r.regret = ctilde - oracle_cost_closed_form(spec);
      r.seed = opts.seed;
      rows.push_back(report_row(param_name, param_value, kl, "approx", r));
    } catch (const std::exception&) {
      rows.push_back(nan_row(param_name, param_value, kl, "approx", opts.seed));
    }
  }
  return rows;
}

std::vector<SweepRow> anomaly_experiment(const AnomalyOptions& opts) {
  std::vector<SweepRow> rows;
  for (double lambda : opts.lambdas) {
    const ProblemSpec spec = make_benchmark_family(opts.delta, opts.policy_rho, lambda);
    const double kl = kl_divergence(spec.alpha, spec.betas[0]);

    SimOptions so;
    so.fixed_horizon = opts.fixed_horizon;
    so.constrained = false;
    so.n_runs = opts.n_runs;
    so.seed = opts.seed;

    PolicyKind low{LowComplexityPolicy{low_complexity_policy(spec)}};
    rows.push_back(report_row("lambda", lambda, kl, "low", estimate_cost(spec, low, so)));

    auto fh = std::make_shared<const FiniteHorizonSolution>(
        solve_finite_horizon(spec, static_cast<int>(opts.fixed_horizon), opts.grid, false));
    PolicyKind fhdp{FiniteHorizonPolicy{fh}};
    rows.push_back(report_row("lambda", lambda, kl, "fhdp", estimate_cost(spec, fhdp, so)));

    // With the escalation constraint lifted, a detect-then-intervene baseline
    // jumps straight to the strongest action once it declares: the ramp was
    // only ever the constrained route to the maximum level.
    PolicyKind fixed{QcdPolicy{opts.fixed_h, true}};
    rows.push_back(report_row("lambda", lambda, kl, "qcd-fixed", estimate_cost(spec, fixed, so)));

    const QcdTuning tuned = tune_qcd(spec, true, opts.h_grid, so);
    rows.push_back(report_row("lambda", lambda, kl, "qcd-tuned", tuned.report));
  }
  return rows;
}

void write_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "param_name,param_value,kl_alpha_beta0,policy,n_runs,mean_cost,stderr,ci_lo,ci_hi,regret,"
        "seed\n";
  for (const SweepRow& r : rows) {
    os << r.param_name << ',' << format_g9(r.param_value) << ',' << format_g9(r.kl_alpha_beta0)
       << ',' << r.policy << ',' << r.n_runs << ',' << format_g9(r.mean_cost) << ','
       << format_g9(r.std_err) << ',' << format_g9(r.ci_lo) << ',' << format_g9(r.ci_hi) << ','
       << format_g9(r.regret) << ',' << r.seed << '\n';
  }
}

}  // namespace qi
