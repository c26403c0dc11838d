#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "abstain/types.hpp"

namespace abstain {

// Running sums over ascending-sorted binary labels.
//   pos_suffix[i] = #positives at index >= i, i in [0, N]
//   pos_prefix[i] = #positives at index <  i, i in [0, N]
//   window_pos[i] = #positives in [i, i + window), i in [0, N - window]
// and likewise for negatives.
struct SuffixCounts {
    std::size_t window = 0;
    std::vector<std::int64_t> pos_suffix;
    std::vector<std::int64_t> neg_suffix;
    std::vector<std::int64_t> pos_prefix;
    std::vector<std::int64_t> neg_prefix;
    std::vector<std::int64_t> window_pos;
    std::vector<std::int64_t> window_neg;

    std::int64_t positives() const noexcept { return pos_suffix.front(); }
    std::int64_t negatives() const noexcept { return neg_suffix.front(); }
};

// labels are 0/1 in sorted order. window may be 0 (window vectors then equal zero).
SuffixCounts compute_suffix_counts(std::span<const Label> labels, std::size_t window);

// Specificity obtained when every index >= threshold is called positive, given
// `negatives_at_or_above` false positives out of `total_negatives`.
inline bool meets_specificity(std::int64_t negatives_at_or_above, std::int64_t total_negatives,
                              double target_specificity) noexcept {
    return 1.0 - static_cast<double>(negatives_at_or_above) / static_cast<double>(total_negatives) >=
           target_specificity;
}

// t* = min{ i | 1 - n-_i / n-_0 >= s }, scanned over i in [0, N].
std::size_t specificity_threshold_index(std::span<const std::int64_t> neg_suffix, double target_specificity);

double sensitivity_at_specificity(const SortedPredictionSet& preds, double target_specificity);
double auroc(const SortedPredictionSet& preds);

// Span forms over already-sorted 0/1 labels; the SortedPredictionSet overloads
// forward here.
double sensitivity_at_specificity(std::span<const Label> sorted_labels, double target_specificity);
double auroc(std::span<const Label> sorted_labels);

// Sufficient statistics for weighted kappa and for its leave-one-out update.
// The hard-label variant holds integer counts; the expected variant replaces
// class indicators with calibrated probabilities.
struct KappaAggregates {
    std::vector<double> class_true_counts;  // N^i (or expected)
    std::vector<double> class_pred_counts;  // F^i
    LabelVector pred_labels;                // f_x
    double total_penalty = 0.0;             // a = sum_x W[y_x, f_x]
    double denom_base = 0.0;                // b1 = sum_ij W_ij N^i F^j / (N - 1)
    std::vector<double> denom_row_adjust;   // b2_i = sum_j W_ij F^j / (N - 1)
    std::vector<double> denom_col_adjust;   // b3_i = sum_j W_ji N^j / (N - 1)
};

KappaAggregates kappa_aggregates(std::span<const Label> pred_labels, std::span<const Label> true_labels,
                                 const PenaltyWeightMatrix& weights);
KappaAggregates expected_kappa_aggregates(const ProbabilityMatrix& probs, std::span<const Label> pred_labels,
                                          const PenaltyWeightMatrix& weights);

// 1 - sum_x W[y_x, f_x] / sum_ij W_ij (N^i / N) F^j. Throws DegenerateDenominator
// when the chance-agreement term vanishes.
double weighted_kappa(std::span<const Label> pred_labels, std::span<const Label> true_labels,
                      const PenaltyWeightMatrix& weights);

}  // namespace abstain
