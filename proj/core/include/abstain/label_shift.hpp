#pragma once

#include <cstddef>

#include "abstain/types.hpp"

namespace abstain {

struct LabelShiftResult {
    ProbabilityMatrix adapted_probs;
    PriorEstimate test_priors;
    std::size_t iterations = 0;
    bool converged = false;
};

// EM re-estimation of test-set priors under label shift. Starting from the
// training priors, alternates
//   E: q_x(i) ∝ P[x, i] * pi(i) / train(i)
//   M: pi(i) = mean_x q_x(i)
// until max_i |pi_new(i) - pi(i)| < tol or max_iter M-steps. Hitting the cap is
// reported through `converged`, not an error.
LabelShiftResult adapt_label_shift_em(const ProbabilityMatrix& test_probs, const PriorEstimate& train_priors,
                                      double tol = 1e-6, std::size_t max_iter = 1000);

// Posteriors reweighted from train to target priors (one E-step).
ProbabilityMatrix reweight_priors(const ProbabilityMatrix& probs, const PriorEstimate& train_priors,
                                  const PriorEstimate& target_priors);

}  // namespace abstain
