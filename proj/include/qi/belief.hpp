#pragma once

#include <vector>

#include "qi/model.hpp"

namespace qi {

// Beliefs are the posterior probability that the change has already
// happened; all functions here are pure and keep results inside [0,1].

// One-step prior: pi + lambda*(1 - pi).
inline double predict(double pi, double lambda) { return pi + lambda * (1.0 - pi); }

// Marginal observation distribution under the predicted belief:
// sigma_a(pi, z) = alpha[z]*(1 - pi~) + betas[a][z]*pi~.
std::vector<double> observation_likelihood(const ProblemSpec& spec, double pi, int action);

// Exact posterior after observing z (zero-based) under intervention level
// `action`: pi~ * betas[a][z] / sigma_a(pi, z).
double update(const ProblemSpec& spec, double pi, int action, int z);

// First-order expansion of `update` around betas[a] == alpha:
// pi~ + pi~ (1 - pi~) (betas[a][z] - alpha[z]) / alpha[z], clamped to [0,1].
double first_order_update(const ProblemSpec& spec, double pi, int action, int z);

}  // namespace qi
