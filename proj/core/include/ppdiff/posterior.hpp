#pragma once

#include "ppdiff/point_set.hpp"
#include "ppdiff/schedule.hpp"

namespace ppdiff {

// Exact reverse-transition kernels of the noising chain, conditioned on the
// clean set. Both accept t in [0, T-1] (t = 0 is the terminal reverse step,
// where the thinning posterior is 1 and the noise posterior is 0, so the clean
// set is restored exactly).

// Probability that a data point absent from X_{t+1} is present in X_t:
// (alpha_bar(t) - alpha_bar(t+1)) / (1 - alpha_bar(t+1)).
double thin_posterior_prob(int t, const DiffusionSchedule& schedule);

// Probability that a noise point of X_{t+1} survives into X_t:
// beta_bar(t) / beta_bar(t+1).
double noise_posterior_keep_prob(int t, const DiffusionSchedule& schedule);

// Draw from q(X_t | X_0, X_{t+1}): re-add each point of X_0 missing from the
// retained part with thin_posterior_prob, thin the noise part with
// noise_posterior_keep_prob. x_next.retained_origin must index into x0.
LabeledState posterior_sample(const PointSet& x0, const LabeledState& x_next,
                              const DiffusionSchedule& schedule, Rng& rng);

}  // namespace ppdiff
