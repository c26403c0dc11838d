#include "abstain/evaluation.hpp"

#include <cstdio>

#include "abstain/error.hpp"
#include "abstain/metrics.hpp"

namespace abstain {

MetricSpec MetricSpec::sens_at_spec(double target_specificity) {
    MetricSpec m;
    m.kind = MetricKind::SensAtSpec;
    m.target_specificity = target_specificity;
    return m;
}

MetricSpec MetricSpec::auroc() {
    MetricSpec m;
    m.kind = MetricKind::Auroc;
    return m;
}

MetricSpec MetricSpec::weighted_kappa(PenaltyWeightMatrix weights) {
    MetricSpec m;
    m.kind = MetricKind::WeightedKappa;
    m.weights = std::move(weights);
    return m;
}

std::string MetricSpec::name() const {
    switch (kind) {
        case MetricKind::SensAtSpec: {
            char buf[64];
            std::snprintf(buf, sizeof buf, "sens_at_spec_%g", target_specificity);
            return buf;
        }
        case MetricKind::Auroc: return "auroc";
        case MetricKind::WeightedKappa: return "weighted_kappa";
    }
    return "unknown";
}

std::vector<std::size_t> retained_indices(std::size_t n, std::span<const std::size_t> abstained) {
    std::vector<char> dropped(n, 0);
    for (std::size_t idx : abstained) {
        if (idx >= n) fail(ErrorCode::InvalidArgument, "abstained index out of range");
        if (dropped[idx]) fail(ErrorCode::InvalidArgument, "abstained index listed twice");
        dropped[idx] = 1;
    }
    std::vector<std::size_t> kept;
    kept.reserve(n - abstained.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (!dropped[i]) kept.push_back(i);
    }
    return kept;
}

double evaluate_metric(const MetricSpec& metric, const ProbabilityMatrix& probs, std::span<const Label> labels,
                       std::span<const std::size_t> abstained) {
    if (labels.size() != probs.rows()) fail(ErrorCode::DimensionMismatch, "labels length differs from predictions");
    const std::vector<std::size_t> kept = retained_indices(probs.rows(), abstained);

    LabelVector kept_labels(kept.size());
    for (std::size_t k = 0; k < kept.size(); ++k) kept_labels[k] = labels[kept[k]];

    if (metric.kind == MetricKind::WeightedKappa) {
        LabelVector predicted(kept.size());
        const LabelVector all_pred = probs.argmax();
        for (std::size_t k = 0; k < kept.size(); ++k) predicted[k] = all_pred[kept[k]];
        return weighted_kappa(predicted, kept_labels, metric.weights);
    }

    if (probs.class_count() != 2) fail(ErrorCode::DimensionMismatch, "binary metric requires two-class predictions");
    std::vector<double> positive(kept.size());
    for (std::size_t k = 0; k < kept.size(); ++k) positive[k] = probs(kept[k], 1);
    const SortedPredictionSet sorted =
        SortedPredictionSet::from_unsorted(positive, std::span<const Label>(kept_labels));
    if (metric.kind == MetricKind::SensAtSpec) return sensitivity_at_specificity(sorted, metric.target_specificity);
    return auroc(sorted);
}

}  // namespace abstain
