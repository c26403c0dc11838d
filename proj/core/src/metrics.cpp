#include "abstain/metrics.hpp"

#include <cmath>
#include <string>

#include "abstain/error.hpp"

namespace abstain {

namespace {

void check_binary_classes(std::int64_t positives, std::int64_t negatives) {
    if (positives == 0) fail(ErrorCode::NoPositives, "no positive labels");
    if (negatives == 0) fail(ErrorCode::NoNegatives, "no negative labels");
}

void check_labels_in_range(std::span<const Label> labels, std::size_t classes, const char* what) {
    for (Label y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= classes) {
            fail(ErrorCode::InvalidArgument, std::string(what) + " label out of range [0, C)");
        }
    }
}

}  // namespace

SuffixCounts compute_suffix_counts(std::span<const Label> labels, std::size_t window) {
    const std::size_t n = labels.size();
    if (window > n) fail(ErrorCode::BudgetTooLarge, "window larger than the number of examples");

    SuffixCounts c;
    c.window = window;
    c.pos_suffix.assign(n + 1, 0);
    c.neg_suffix.assign(n + 1, 0);
    c.pos_prefix.assign(n + 1, 0);
    c.neg_prefix.assign(n + 1, 0);
    for (std::size_t k = n; k-- > 0;) {
        c.pos_suffix[k] = c.pos_suffix[k + 1] + (labels[k] == 1);
        c.neg_suffix[k] = c.neg_suffix[k + 1] + (labels[k] == 0);
    }
    for (std::size_t k = 0; k < n; ++k) {
        c.pos_prefix[k + 1] = c.pos_prefix[k] + (labels[k] == 1);
        c.neg_prefix[k + 1] = c.neg_prefix[k] + (labels[k] == 0);
    }
    const std::size_t starts = n + 1 - window;
    c.window_pos.resize(starts);
    c.window_neg.resize(starts);
    for (std::size_t i = 0; i < starts; ++i) {
        c.window_pos[i] = c.pos_suffix[i] - c.pos_suffix[i + window];
        c.window_neg[i] = c.neg_suffix[i] - c.neg_suffix[i + window];
    }
    return c;
}

std::size_t specificity_threshold_index(std::span<const std::int64_t> neg_suffix, double target_specificity) {
    const std::int64_t total = neg_suffix.front();
    for (std::size_t i = 0; i < neg_suffix.size(); ++i) {
        if (meets_specificity(neg_suffix[i], total, target_specificity)) return i;
    }
    return neg_suffix.size() - 1;
}

double sensitivity_at_specificity(std::span<const Label> sorted_labels, double target_specificity) {
    if (!(target_specificity > 0.0 && target_specificity < 1.0)) {
        fail(ErrorCode::InvalidSpecificity, "target specificity must lie in (0, 1)");
    }
    const SuffixCounts c = compute_suffix_counts(sorted_labels, 0);
    check_binary_classes(c.positives(), c.negatives());
    const std::size_t t = specificity_threshold_index(c.neg_suffix, target_specificity);
    return static_cast<double>(c.pos_suffix[t]) / static_cast<double>(c.positives());
}

double sensitivity_at_specificity(const SortedPredictionSet& preds, double target_specificity) {
    return sensitivity_at_specificity(preds.labels(), target_specificity);
}

double auroc(std::span<const Label> sorted_labels) {
    std::int64_t negatives_below = 0;
    std::int64_t positives = 0;
    std::int64_t rank_sum = 0;
    for (Label y : sorted_labels) {
        if (y == 1) {
            rank_sum += negatives_below;
            ++positives;
        } else {
            ++negatives_below;
        }
    }
    check_binary_classes(positives, negatives_below);
    return static_cast<double>(rank_sum) /
           (static_cast<double>(negatives_below) * static_cast<double>(positives));
}

double auroc(const SortedPredictionSet& preds) { return auroc(preds.labels()); }

namespace {

void fill_denominator_terms(KappaAggregates& agg, const PenaltyWeightMatrix& weights, std::size_t n) {
    const std::size_t classes = weights.dimension();
    const double scale = 1.0 / static_cast<double>(n - 1);
    agg.denom_base = 0.0;
    agg.denom_row_adjust.assign(classes, 0.0);
    agg.denom_col_adjust.assign(classes, 0.0);
    for (std::size_t i = 0; i < classes; ++i) {
        for (std::size_t j = 0; j < classes; ++j) {
            agg.denom_base += weights(i, j) * agg.class_true_counts[i] * agg.class_pred_counts[j] * scale;
            agg.denom_row_adjust[i] += weights(i, j) * agg.class_pred_counts[j] * scale;
            agg.denom_col_adjust[i] += weights(j, i) * agg.class_true_counts[j] * scale;
        }
    }
}

}  // namespace

KappaAggregates kappa_aggregates(std::span<const Label> pred_labels, std::span<const Label> true_labels,
                                 const PenaltyWeightMatrix& weights) {
    const std::size_t n = pred_labels.size();
    if (true_labels.size() != n) fail(ErrorCode::DimensionMismatch, "label vectors differ in length");
    if (n < 2) fail(ErrorCode::InvalidArgument, "weighted kappa needs at least 2 examples");
    const std::size_t classes = weights.dimension();
    check_labels_in_range(pred_labels, classes, "predicted");
    check_labels_in_range(true_labels, classes, "true");

    KappaAggregates agg;
    agg.class_true_counts.assign(classes, 0.0);
    agg.class_pred_counts.assign(classes, 0.0);
    agg.pred_labels.assign(pred_labels.begin(), pred_labels.end());
    for (std::size_t x = 0; x < n; ++x) {
        const auto y = static_cast<std::size_t>(true_labels[x]);
        const auto f = static_cast<std::size_t>(pred_labels[x]);
        agg.class_true_counts[y] += 1.0;
        agg.class_pred_counts[f] += 1.0;
        agg.total_penalty += weights(y, f);
    }
    fill_denominator_terms(agg, weights, n);
    return agg;
}

KappaAggregates expected_kappa_aggregates(const ProbabilityMatrix& probs, std::span<const Label> pred_labels,
                                          const PenaltyWeightMatrix& weights) {
    const std::size_t n = probs.rows();
    const std::size_t classes = weights.dimension();
    if (probs.class_count() != classes) fail(ErrorCode::DimensionMismatch, "penalty matrix dimension differs from C");
    if (pred_labels.size() != n) fail(ErrorCode::DimensionMismatch, "predicted labels differ in length");
    if (n < 2) fail(ErrorCode::InvalidArgument, "weighted kappa needs at least 2 examples");
    check_labels_in_range(pred_labels, classes, "predicted");

    KappaAggregates agg;
    agg.class_true_counts.assign(classes, 0.0);
    agg.class_pred_counts.assign(classes, 0.0);
    agg.pred_labels.assign(pred_labels.begin(), pred_labels.end());
    for (std::size_t x = 0; x < n; ++x) {
        const auto f = static_cast<std::size_t>(pred_labels[x]);
        agg.class_pred_counts[f] += 1.0;
        for (std::size_t i = 0; i < classes; ++i) {
            agg.class_true_counts[i] += probs(x, i);
            agg.total_penalty += weights(i, f) * probs(x, i);
        }
    }
    fill_denominator_terms(agg, weights, n);
    return agg;
}

double weighted_kappa(std::span<const Label> pred_labels, std::span<const Label> true_labels,
                      const PenaltyWeightMatrix& weights) {
    const KappaAggregates agg = kappa_aggregates(pred_labels, true_labels, weights);
    const double n = static_cast<double>(pred_labels.size());
    double chance = 0.0;
    for (std::size_t i = 0; i < weights.dimension(); ++i) {
        for (std::size_t j = 0; j < weights.dimension(); ++j) {
            chance += weights(i, j) * (agg.class_true_counts[i] / n) * agg.class_pred_counts[j];
        }
    }
    if (std::abs(chance) < 1e-12) {
        fail(ErrorCode::DegenerateDenominator, "weighted kappa undefined: chance disagreement is zero");
    }
    return 1.0 - agg.total_penalty / chance;
}

}  // namespace abstain
