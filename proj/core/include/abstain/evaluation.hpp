#pragma once

#include <span>
#include <string>
#include <vector>

#include "abstain/types.hpp"

namespace abstain {

enum class MetricKind { SensAtSpec, Auroc, WeightedKappa };

struct MetricSpec {
    MetricKind kind = MetricKind::Auroc;
    double target_specificity = 0.9;  // SensAtSpec only
    PenaltyWeightMatrix weights;      // WeightedKappa only

    static MetricSpec sens_at_spec(double target_specificity);
    static MetricSpec auroc();
    static MetricSpec weighted_kappa(PenaltyWeightMatrix weights);

    // Column-friendly name, e.g. "sens_at_spec_0.9", "auroc", "weighted_kappa".
    std::string name() const;
};

// Metric on the examples not listed in `abstained`, using their true labels.
// Binary metrics rank by the class-1 column with a stable sort; kappa uses
// argmax predictions. Duplicate or out-of-range indices are rejected.
double evaluate_metric(const MetricSpec& metric, const ProbabilityMatrix& probs, std::span<const Label> labels,
                       std::span<const std::size_t> abstained = {});

// Complement of `abstained` in [0, n), ascending.
std::vector<std::size_t> retained_indices(std::size_t n, std::span<const std::size_t> abstained);

}  // namespace abstain
