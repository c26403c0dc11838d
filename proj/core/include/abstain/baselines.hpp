#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "abstain/types.hpp"

namespace abstain {

enum class BaselineMethod { MaxClassProb, Entropy, JsDivergenceFromPriors, ExternalVariance };

// Abstention priority per example; higher means abstain first.
//   MaxClassProb:           -max_i P[x, i]
//   Entropy:                -sum_i P log P           (natural log, 0 log 0 = 0)
//   JsDivergenceFromPriors: -JSD(P[x] || priors)     (closest to the priors first)
//   ExternalVariance:       variance[x], e.g. from test-time dropout
std::vector<double> baseline_scores(const ProbabilityMatrix& probs, BaselineMethod method,
                                    const std::optional<PriorEstimate>& priors = std::nullopt,
                                    std::optional<std::span<const double>> variance = std::nullopt);

double entropy(std::span<const double> dist);
double jensen_shannon_divergence(std::span<const double> p, std::span<const double> q);

std::string_view baseline_name(BaselineMethod method);

}  // namespace abstain
