#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "abstain/metrics.hpp"
#include "abstain/types.hpp"

namespace abstain {

enum class WindowMetric { SensAtSpec, Auroc };
enum class ScorerMode { MonteCarlo, Deterministic };

struct MonteCarloConfig {
    std::size_t samples = 100;
    std::uint64_t seed = 0;
    bool smooth = true;
    // Savitzky-Golay parameters used when smooth is set.
    int smooth_window = 11;
    int smooth_polyorder = 1;
};

// scores[i] estimates the metric after abstaining on sorted indices [i, i + window).
struct WindowScoreVector {
    std::vector<double> scores;
    std::size_t window = 0;
    WindowMetric metric = WindowMetric::Auroc;
    // Monte-Carlo only: number of samples that contributed to each entry.
    std::vector<std::size_t> valid_samples;
};

// scores[x] estimates the metric after abstaining on example x alone.
struct MarginalScoreVector {
    std::vector<double> scores;
};

// Specificity threshold indices after removing j negatives (0 <= j <= max_removed)
// from the left (below) or the right (at/above) of the threshold.
struct ThresholdVectors {
    std::size_t pre_threshold = 0;
    std::vector<std::size_t> left_shift;
    std::vector<std::size_t> right_shift;
};

ThresholdVectors compute_threshold_vectors(std::span<const std::int64_t> neg_suffix, double target_specificity,
                                           std::size_t max_removed);

// Rank-sum bookkeeping for the windowed auROC shortcut. T is std::int64_t for
// sampled labels and double for expected labels.
template <typename T>
struct AurocSums {
    T positives{};
    T negatives{};
    T total_rank_sum{};              // S = sum_i y_i s-_i
    std::vector<T> pos_prefix;       // s+_i, i in [0, N]
    std::vector<T> window_pos;       // w+_i
    std::vector<T> window_neg;       // w-_i
    std::vector<T> window_rank_sum;  // W_i = sum_{i<=k<i+d} y_k s-_k
    std::vector<T> post_sums;        // S^i = S - W_i - (n+ - s+_{i+d}) w-_i
};

AurocSums<std::int64_t> compute_auroc_sums(std::span<const Label> sorted_labels, std::size_t window);
AurocSums<double> compute_expected_auroc_sums(std::span<const double> sorted_probs, std::size_t window);

// Sensitivity at a target specificity for every contiguous abstention window,
// estimated by sampling labels from the calibrated probabilities. One label
// vector per sample is shared by all windows. Samples in which a window's
// complement loses every positive or every negative are skipped for that
// window; an entry with no valid sample is 0.
WindowScoreVector score_windows_sens_at_spec(const SortedPredictionSet& preds, double target_specificity,
                                             std::size_t window, const MonteCarloConfig& mc);

// Same inner update as above for one fixed label vector; exposed for testing.
// Adds each window's post-abstention sensitivity to acc and bumps valid.
void accumulate_sens_at_spec_sample(std::span<const Label> sorted_labels, double target_specificity,
                                    std::size_t window, std::span<double> acc, std::span<std::size_t> valid);

WindowScoreVector score_windows_auroc(const SortedPredictionSet& preds, std::size_t window, ScorerMode mode,
                                      const MonteCarloConfig& mc);

// Leave-one-out weighted kappa estimates with f_x = argmax of each row.
MarginalScoreVector score_examples_kappa(const ProbabilityMatrix& probs, const PenaltyWeightMatrix& weights,
                                         ScorerMode mode, const MonteCarloConfig& mc);

}  // namespace abstain
