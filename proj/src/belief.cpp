#include "qi/belief.hpp"

#include <algorithm>
#include <cassert>

namespace qi {

std::vector<double> observation_likelihood(const ProblemSpec& spec, double pi, int action) {
  assert(action >= 0 && action <= spec.num_actions);
  const double pit = predict(pi, spec.lambda);
  std::vector<double> out(spec.num_obs);
  for (int z = 0; z < spec.num_obs; ++z) {
    out[z] = spec.alpha[z] * (1.0 - pit) + spec.betas[action][z] * pit;
  }
  return out;
}

double update(const ProblemSpec& spec, double pi, int action, int z) {
  assert(action >= 0 && action <= spec.num_actions);
  assert(z >= 0 && z < spec.num_obs);
  const double pit = predict(pi, spec.lambda);
  const double num = pit * spec.betas[action][z];
  const double den = num + (1.0 - pit) * spec.alpha[z];
  return num / den;
}

double first_order_update(const ProblemSpec& spec, double pi, int action, int z) {
  assert(action >= 0 && action <= spec.num_actions);
  assert(z >= 0 && z < spec.num_obs);
  const double pit = predict(pi, spec.lambda);
  const double rel = (spec.betas[action][z] - spec.alpha[z]) / spec.alpha[z];
  return std::clamp(pit + (1.0 - pit) * pit * rel, 0.0, 1.0);
}

}  // namespace qi
