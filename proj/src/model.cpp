#include "qi/model.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace qi {

namespace {

double vec_sum(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void add_violation(ValidationReport& rep, std::string rule, std::string msg,
                   std::vector<int> indices, double margin, bool fatal) {
  rep.violations.push_back({std::move(rule), std::move(msg), std::move(indices), margin, fatal});
}

// Probability-vector checks shared by alpha and each betas row.
void check_distribution(ValidationReport& rep, const std::vector<double>& v,
                        const std::string& name, int row) {
  const double sum = vec_sum(v);
  if (std::abs(sum - 1.0) > kProbSumTol) {
    add_violation(rep, "prob_sum", name + " sums to " + std::to_string(sum) + ", expected 1",
                  {row}, std::abs(sum - 1.0), true);
  }
  for (std::size_t z = 0; z < v.size(); ++z) {
    if (!(v[z] > 0.0)) {
      add_violation(rep, "positivity", name + " has nonpositive entry", {row, static_cast<int>(z)},
                    v[z], true);
      break;
    }
  }
}

}  // namespace

ValidationReport validate_spec(const ProblemSpec& spec, Strictness strictness) {
  ValidationReport rep;
  const int Z = spec.num_obs;
  const int A = spec.num_actions;
  const bool soft = strictness == Strictness::Warn;

  // Dimension checks come first; everything else assumes consistent shapes.
  bool dims_ok = Z >= 1 && A >= 1;
  dims_ok = dims_ok && spec.alpha.size() == static_cast<std::size_t>(Z);
  dims_ok = dims_ok && spec.c_p.size() == static_cast<std::size_t>(Z);
  dims_ok = dims_ok && spec.betas.size() == static_cast<std::size_t>(A + 1);
  dims_ok = dims_ok && spec.c_i.size() == static_cast<std::size_t>(A + 1);
  if (dims_ok) {
    for (const auto& row : spec.betas) {
      if (row.size() != static_cast<std::size_t>(Z)) dims_ok = false;
    }
  }
  if (!dims_ok) {
    add_violation(rep, "dims", "array sizes are inconsistent with Z/A", {}, 0.0, true);
    rep.passed = false;
    return rep;
  }

  if (!(spec.rho > 0.0 && spec.rho < 1.0)) {
    add_violation(rep, "param_range", "rho must lie strictly inside (0,1)", {}, spec.rho, true);
  }
  if (!(spec.lambda > 0.0 && spec.lambda <= 1.0)) {
    add_violation(rep, "param_range", "lambda must lie inside (0,1]", {}, spec.lambda, true);
  }

  check_distribution(rep, spec.alpha, "alpha", -1);
  for (int a = 0; a <= A; ++a) {
    check_distribution(rep, spec.betas[a], "betas[" + std::to_string(a) + "]", a);
  }

  for (int z = 0; z + 1 < Z; ++z) {
    if (spec.c_p[z] > spec.c_p[z + 1]) {
      add_violation(rep, "cp_monotone", "c_p must be nondecreasing in z", {z},
                    spec.c_p[z] - spec.c_p[z + 1], true);
      break;
    }
  }
  if (spec.c_i[0] != 0.0) {
    add_violation(rep, "ci_zero", "idle must be free: c_i[0] == 0", {0}, spec.c_i[0], true);
  }
  for (int a = 0; a < A; ++a) {
    if (spec.c_i[a] > spec.c_i[a + 1]) {
      add_violation(rep, "ci_monotone", "c_i must be nondecreasing in a", {a},
                    spec.c_i[a] - spec.c_i[a + 1], true);
      break;
    }
  }

  {
    double worst = 0.0;
    int worst_z = -1;
    for (int z = 0; z < Z; ++z) {
      const double diff = std::abs(spec.betas[A][z] - spec.alpha[z]);
      if (diff > worst) {
        worst = diff;
        worst_z = z;
      }
    }
    if (worst > kProbSumTol) {
      add_violation(rep, "top_level_alpha",
                    "betas[A] must equal alpha: the strictest level removes the change's effect",
                    {A, worst_z}, worst, true);
    }
  }

  // Likelihood-ratio ordering: betas[a-1](z)/betas[a](z) nondecreasing in z,
  // checked via cross products to avoid dividing by small entries.
  {
    double worst = 0.0;
    std::vector<int> worst_idx;
    for (int a = 1; a <= A; ++a) {
      for (int z = 0; z + 1 < Z; ++z) {
        const double lhs = spec.betas[a - 1][z] * spec.betas[a][z + 1];
        const double rhs = spec.betas[a - 1][z + 1] * spec.betas[a][z];
        const double excess = lhs - rhs;
        if (excess > worst) {
          worst = excess;
          worst_idx = {a, z};
        }
      }
    }
    if (worst > 1e-12) {
      add_violation(rep, "mlr_order",
                    "betas must be likelihood-ratio ordered: looser levels shift mass upward",
                    worst_idx, worst, !soft);
    }
  }

  // Stricter levels must strictly pay off once the change is active:
  // sum betas[a]*c_p + c_i[a] < sum betas[a-1]*c_p + c_i[a-1].
  {
    double worst = -1.0;
    int worst_a = -1;
    for (int a = 1; a <= A; ++a) {
      const double stricter = dot(spec.betas[a], spec.c_p) + spec.c_i[a];
      const double looser = dot(spec.betas[a - 1], spec.c_p) + spec.c_i[a - 1];
      const double excess = stricter - looser;
      if (excess >= 0.0 && excess > worst) {
        worst = excess;
        worst_a = a;
      }
    }
    if (worst_a >= 0) {
      add_violation(rep, "stricter_better",
                    "each stricter level must strictly lower expected post-change step cost",
                    {worst_a}, worst, !soft);
    }
  }

  rep.passed = true;
  for (const auto& v : rep.violations) {
    if (v.fatal) rep.passed = false;
  }
  return rep;
}

ProblemSpec make_benchmark_family(double delta, double rho, double lambda) {
  if (!(delta > 0.0 && delta < 0.2 / 6.0)) {
    throw std::invalid_argument("benchmark family requires 0 < delta < 0.2/6");
  }
  ProblemSpec spec;
  spec.num_obs = 5;
  spec.num_actions = 3;
  spec.alpha.assign(5, 0.2);
  spec.c_p = {0.0, 1.0, 2.0, 3.0, 4.0};
  spec.c_i = {0.0, 0.02, 0.06, 0.2};
  spec.rho = rho;
  spec.lambda = lambda;
  spec.betas.resize(4);
  for (int i = 0; i <= 3; ++i) {
    const double wide = (6.0 - 2.0 * i) * delta;
    const double narrow = (3.0 - i) * delta;
    spec.betas[i] = {0.2 - wide, 0.2 - narrow, 0.2, 0.2 + narrow, 0.2 + wide};
  }
  return spec;
}

LocalRegimeReport local_regime_report(const ProblemSpec& spec) {
  LocalRegimeReport rep;
  double max_gap = 0.0;
  double min_gap = 0.0;
  bool first = true;
  for (int a = 1; a <= spec.num_actions; ++a) {
    for (int s = 1; s < spec.num_obs; ++s) {
      double tail_prev = 0.0, tail_cur = 0.0;
      for (int z = s; z < spec.num_obs; ++z) {
        tail_prev += spec.betas[a - 1][z];
        tail_cur += spec.betas[a][z];
      }
      const double gap = std::abs(tail_prev - tail_cur);
      rep.per_pair.push_back({a, s, gap});
      max_gap = std::max(max_gap, gap);
      min_gap = first ? gap : std::min(min_gap, gap);
      first = false;
    }
  }
  rep.delta_eff = max_gap;
  rep.gamma_eff = max_gap > 0.0 ? min_gap / max_gap : 0.0;
  return rep;
}

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("kl_divergence: length mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(q[i] > 0.0)) {
      throw std::invalid_argument("kl_divergence: q has a nonpositive entry");
    }
    if (p[i] > 0.0) s += p[i] * std::log(p[i] / q[i]);
  }
  return s;
}

void renormalize_in_tolerance(ProblemSpec& spec) {
  auto fix = [](std::vector<double>& v) {
    const double sum = vec_sum(v);
    if (sum > 0.0 && sum != 1.0 && std::abs(sum - 1.0) <= kProbSumTol) {
      for (double& x : v) x /= sum;
    }
  };
  fix(spec.alpha);
  for (auto& row : spec.betas) fix(row);
}

}  // namespace qi
