#pragma once

#include <string>
#include <vector>

namespace qi {

// Parameterization of the change-point intervention problem.
//
// A hidden change occurs at a geometric time tau (hazard lambda); before the
// change, observations are drawn from alpha; after it, from betas[a] where a
// is the intervention level currently applied. The process survives each step
// with probability rho. Every observation z costs c_p[z] and every step at
// level a costs c_i[a].
//
// Conventions: observation indices are zero-based (z in {0..Z-1}), action 0
// is idle, and betas[A] must equal alpha (the strictest level fully contains
// the anomaly).
struct ProblemSpec {
  int num_obs = 0;      // Z
  int num_actions = 0;  // A; levels run over {0..A}
  std::vector<double> alpha;               // pre-change distribution, length Z
  std::vector<std::vector<double>> betas;  // post-change distribution per level, (A+1) x Z
  std::vector<double> c_p;                 // propagation cost per observation, length Z
  std::vector<double> c_i;                 // intervention cost per level, length A+1
  double rho = 0.0;     // continuation probability; T ~ Geometric(1 - rho) on {1,2,...}
  double lambda = 0.0;  // change hazard; tau ~ Geometric(lambda) on {1,2,...}
};

enum class Strictness { Strict, Warn };

struct Violation {
  std::string rule;          // stable identifier, e.g. "mlr_order"
  std::string message;       // human-readable description
  std::vector<int> indices;  // worst offending indices (meaning depends on rule)
  double margin = 0.0;       // how far past the rule, in the rule's units
  bool fatal = true;
};

struct ValidationReport {
  bool passed = false;  // true iff no fatal violation was found
  std::vector<Violation> violations;
};

// |tail(betas[action-1]) - tail(betas[action])| where the tail sums entries
// from tail_start (zero-based, >= 1) to the end.
struct TailGap {
  int action = 0;
  int tail_start = 0;
  double gap = 0.0;
};

// Summary of how strongly adjacent intervention levels separate, measured by
// tail-sum gaps. delta_eff is the largest gap, gamma_eff the smallest divided
// by the largest (0 when all distributions coincide).
struct LocalRegimeReport {
  double delta_eff = 0.0;
  double gamma_eff = 0.0;
  std::vector<TailGap> per_pair;
};

inline constexpr double kProbSumTol = 1e-12;

// Structural and semantic checks. Dimension and probability checks are always
// fatal; the likelihood-ratio ordering and the "stricter levels cost less
// post-change" checks are downgraded to warnings under Strictness::Warn.
// Pure: does not mutate the input and is idempotent.
ValidationReport validate_spec(const ProblemSpec& spec, Strictness strictness = Strictness::Strict);

// Built-in benchmark family: Z=5, A=3, uniform alpha = 0.2, c_p = [0,1,2,3,4],
// c_i = [0, 0.02, 0.06, 0.2], and symmetric post-change perturbations
// betas[i] = [0.2-(6-2i)d, 0.2-(3-i)d, 0.2, 0.2+(3-i)d, 0.2+(6-2i)d].
// Requires 0 < delta < 0.2/6 so every entry stays strictly positive.
ProblemSpec make_benchmark_family(double delta, double rho = 0.99, double lambda = 0.03);

LocalRegimeReport local_regime_report(const ProblemSpec& spec);

// sum_z p[z] * ln(p[z]/q[z]); p[z] == 0 terms contribute zero. Throws on a
// length mismatch or a nonpositive q entry.
double kl_divergence(const std::vector<double>& p, const std::vector<double>& q);

// Rescales probability vectors whose sums are within kProbSumTol of 1 so they
// sum to exactly 1. Vectors farther off are left untouched for validate_spec
// to reject.
void renormalize_in_tolerance(ProblemSpec& spec);

}  // namespace qi
