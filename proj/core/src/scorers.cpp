#include "abstain/scorers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "abstain/error.hpp"
#include "abstain/rng.hpp"
#include "abstain/smoothing.hpp"

namespace abstain {

namespace {

void check_window(std::size_t window, std::size_t n) {
    if (window == 0) fail(ErrorCode::InvalidArgument, "abstention window must be at least 1");
    if (window >= n) {
        fail(ErrorCode::BudgetTooLarge,
             "abstention window " + std::to_string(window) + " must be smaller than N=" + std::to_string(n));
    }
}

void check_samples(const MonteCarloConfig& mc) {
    if (mc.samples == 0) fail(ErrorCode::InvalidArgument, "Monte-Carlo sample count must be at least 1");
}

// Smallest t in [0, last] with pred(t) true, for pred monotone false->true.
// Starts from a hint and walks in whichever direction is needed.
template <typename Pred>
std::size_t walk_to_min_satisfying(std::size_t hint, std::size_t last, Pred pred) {
    std::size_t t = std::min(hint, last);
    while (t < last && !pred(t)) ++t;
    while (t > 0 && pred(t - 1)) --t;
    return t;
}

void sample_binary_labels(std::span<const double> probs, std::uint64_t seed, std::size_t sample,
                          std::span<Label> out) {
    Rng rng(seed, sample);
    for (std::size_t k = 0; k < probs.size(); ++k) out[k] = rng.bernoulli(probs[k]) ? 1 : 0;
}

void finish_window_scores(WindowScoreVector& result, std::span<const double> acc, const MonteCarloConfig& mc) {
    result.scores.resize(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i) {
        result.scores[i] = result.valid_samples[i] > 0 ? acc[i] / static_cast<double>(result.valid_samples[i]) : 0.0;
    }
    if (mc.smooth && result.scores.size() >= static_cast<std::size_t>(mc.smooth_window)) {
        result.scores = smooth_savitzky_golay(result.scores, mc.smooth_window, mc.smooth_polyorder);
    }
}

}  // namespace

ThresholdVectors compute_threshold_vectors(std::span<const std::int64_t> neg_suffix, double target_specificity,
                                           std::size_t max_removed) {
    const std::int64_t total = neg_suffix.front();
    if (total <= 0) fail(ErrorCode::NoNegatives, "threshold vectors need at least one negative");
    if (static_cast<std::int64_t>(max_removed) >= total) {
        fail(ErrorCode::InvalidArgument, "cannot remove every negative when computing thresholds");
    }
    const std::size_t last = neg_suffix.size() - 1;

    ThresholdVectors tv;
    tv.pre_threshold = specificity_threshold_index(neg_suffix, target_specificity);
    tv.left_shift.resize(max_removed + 1);
    tv.right_shift.resize(max_removed + 1);

    std::size_t left = tv.pre_threshold;
    std::size_t right = tv.pre_threshold;
    for (std::size_t j = 0; j <= max_removed; ++j) {
        const auto removed = static_cast<std::int64_t>(j);
        const std::int64_t remaining = total - removed;
        left = walk_to_min_satisfying(left, last, [&](std::size_t t) {
            return meets_specificity(neg_suffix[t], remaining, target_specificity);
        });
        right = walk_to_min_satisfying(right, last, [&](std::size_t t) {
            return meets_specificity(neg_suffix[t] - removed, remaining, target_specificity);
        });
        tv.left_shift[j] = left;
        tv.right_shift[j] = right;
    }
    return tv;
}

void accumulate_sens_at_spec_sample(std::span<const Label> sorted_labels, double target_specificity,
                                    std::size_t window, std::span<double> acc, std::span<std::size_t> valid) {
    const std::size_t n = sorted_labels.size();
    const SuffixCounts c = compute_suffix_counts(sorted_labels, window);
    const std::int64_t positives = c.positives();
    const std::int64_t negatives = c.negatives();
    if (positives == 0 || negatives == 0) return;

    const std::size_t max_removed = std::min<std::size_t>(window, static_cast<std::size_t>(negatives - 1));
    const ThresholdVectors tv = compute_threshold_vectors(c.neg_suffix, target_specificity, max_removed);

    for (std::size_t i = 0; i + window <= n; ++i) {
        const std::int64_t wn = c.window_neg[i];
        const std::int64_t wp = c.window_pos[i];
        if (wn >= negatives || wp >= positives) continue;

        const auto j = static_cast<std::size_t>(wn);
        const std::size_t right = tv.right_shift[j];
        const std::size_t threshold = right <= i ? right : std::max(tv.left_shift[j], i + window);
        const std::int64_t caught = c.pos_suffix[threshold] - (threshold <= i ? wp : 0);
        acc[i] += static_cast<double>(caught) / static_cast<double>(positives - wp);
        ++valid[i];
    }
}

WindowScoreVector score_windows_sens_at_spec(const SortedPredictionSet& preds, double target_specificity,
                                             std::size_t window, const MonteCarloConfig& mc) {
    if (!(target_specificity > 0.0 && target_specificity < 1.0)) {
        fail(ErrorCode::InvalidSpecificity, "target specificity must lie in (0, 1)");
    }
    const std::size_t n = preds.size();
    check_window(window, n);
    check_samples(mc);

    const std::size_t starts = n + 1 - window;
    WindowScoreVector result;
    result.window = window;
    result.metric = WindowMetric::SensAtSpec;
    result.valid_samples.assign(starts, 0);
    std::vector<double> acc(starts, 0.0);
    LabelVector labels(n);
    for (std::size_t m = 0; m < mc.samples; ++m) {
        sample_binary_labels(preds.probs(), mc.seed, m, labels);
        accumulate_sens_at_spec_sample(labels, target_specificity, window, acc, result.valid_samples);
    }
    finish_window_scores(result, acc, mc);
    return result;
}

AurocSums<std::int64_t> compute_auroc_sums(std::span<const Label> sorted_labels, std::size_t window) {
    const std::size_t n = sorted_labels.size();
    if (window > n) fail(ErrorCode::BudgetTooLarge, "window larger than the number of examples");

    AurocSums<std::int64_t> s;
    s.pos_prefix.assign(n + 1, 0);
    std::vector<std::int64_t> neg_prefix(n + 1, 0);
    std::vector<std::int64_t> rank_prefix(n + 1, 0);
    for (std::size_t k = 0; k < n; ++k) {
        const std::int64_t y = sorted_labels[k] == 1 ? 1 : 0;
        s.pos_prefix[k + 1] = s.pos_prefix[k] + y;
        neg_prefix[k + 1] = neg_prefix[k] + (1 - y);
        rank_prefix[k + 1] = rank_prefix[k] + y * neg_prefix[k];
    }
    s.positives = s.pos_prefix[n];
    s.negatives = neg_prefix[n];
    s.total_rank_sum = rank_prefix[n];

    const std::size_t starts = n + 1 - window;
    s.window_pos.resize(starts);
    s.window_neg.resize(starts);
    s.window_rank_sum.resize(starts);
    s.post_sums.resize(starts);
    for (std::size_t i = 0; i < starts; ++i) {
        s.window_pos[i] = s.pos_prefix[i + window] - s.pos_prefix[i];
        s.window_neg[i] = neg_prefix[i + window] - neg_prefix[i];
        s.window_rank_sum[i] = rank_prefix[i + window] - rank_prefix[i];
        s.post_sums[i] = s.total_rank_sum - s.window_rank_sum[i] -
                         (s.positives - s.pos_prefix[i + window]) * s.window_neg[i];
    }
    return s;
}

AurocSums<double> compute_expected_auroc_sums(std::span<const double> sorted_probs, std::size_t window) {
    const std::size_t n = sorted_probs.size();
    if (window > n) fail(ErrorCode::BudgetTooLarge, "window larger than the number of examples");

    AurocSums<double> s;
    s.pos_prefix.assign(n + 1, 0.0);
    std::vector<double> neg_prefix(n + 1, 0.0);
    std::vector<double> rank_prefix(n + 1, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double p = sorted_probs[k];
        s.pos_prefix[k + 1] = s.pos_prefix[k] + p;
        neg_prefix[k + 1] = neg_prefix[k] + (1.0 - p);
        rank_prefix[k + 1] = rank_prefix[k] + p * neg_prefix[k];
    }
    s.positives = s.pos_prefix[n];
    s.negatives = neg_prefix[n];
    s.total_rank_sum = rank_prefix[n];

    const std::size_t starts = n + 1 - window;
    s.window_pos.resize(starts);
    s.window_neg.resize(starts);
    s.window_rank_sum.resize(starts);
    s.post_sums.resize(starts);
    for (std::size_t i = 0; i < starts; ++i) {
        s.window_pos[i] = s.pos_prefix[i + window] - s.pos_prefix[i];
        s.window_neg[i] = neg_prefix[i + window] - neg_prefix[i];
        s.window_rank_sum[i] = rank_prefix[i + window] - rank_prefix[i];
        s.post_sums[i] = s.total_rank_sum - s.window_rank_sum[i] -
                         (s.positives - s.pos_prefix[i + window]) * s.window_neg[i];
    }
    return s;
}

WindowScoreVector score_windows_auroc(const SortedPredictionSet& preds, std::size_t window, ScorerMode mode,
                                      const MonteCarloConfig& mc) {
    const std::size_t n = preds.size();
    check_window(window, n);
    const std::size_t starts = n + 1 - window;

    WindowScoreVector result;
    result.window = window;
    result.metric = WindowMetric::Auroc;

    if (mode == ScorerMode::Deterministic) {
        const AurocSums<double> s = compute_expected_auroc_sums(preds.probs(), window);
        result.scores.resize(starts);
        result.valid_samples.assign(starts, 1);
        for (std::size_t i = 0; i < starts; ++i) {
            const double neg_left = s.negatives - s.window_neg[i];
            const double pos_left = s.positives - s.window_pos[i];
            if (neg_left <= 1e-12 || pos_left <= 1e-12) {
                fail(ErrorCode::DegenerateExpectedCounts,
                     "expected positives or negatives outside window " + std::to_string(i) + " vanish");
            }
            result.scores[i] = s.post_sums[i] / (neg_left * pos_left);
        }
        return result;
    }

    check_samples(mc);
    result.valid_samples.assign(starts, 0);
    std::vector<double> acc(starts, 0.0);
    LabelVector labels(n);
    for (std::size_t m = 0; m < mc.samples; ++m) {
        sample_binary_labels(preds.probs(), mc.seed, m, labels);
        const AurocSums<std::int64_t> s = compute_auroc_sums(labels, window);
        for (std::size_t i = 0; i < starts; ++i) {
            const std::int64_t neg_left = s.negatives - s.window_neg[i];
            const std::int64_t pos_left = s.positives - s.window_pos[i];
            if (neg_left == 0 || pos_left == 0) continue;
            acc[i] += static_cast<double>(s.post_sums[i]) /
                      (static_cast<double>(neg_left) * static_cast<double>(pos_left));
            ++result.valid_samples[i];
        }
    }
    finish_window_scores(result, acc, mc);
    return result;
}

namespace {

double leave_one_out_kappa(const KappaAggregates& agg, const PenaltyWeightMatrix& weights, std::size_t true_cls,
                           std::size_t pred_cls, double inv_n_minus_1) {
    const double w = weights(true_cls, pred_cls);
    const double denom =
        agg.denom_base - agg.denom_row_adjust[true_cls] - agg.denom_col_adjust[pred_cls] + w * inv_n_minus_1;
    if (std::abs(denom) < 1e-12) {
        fail(ErrorCode::DegenerateDenominator, "leave-one-out kappa denominator vanishes");
    }
    return 1.0 - (agg.total_penalty - w) / denom;
}

Label sample_class(std::span<const double> row, Rng& rng) {
    const double u = rng.uniform();
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (row[i] <= 0.0) continue;
        cumulative += row[i];
        last_positive = i;
        if (u < cumulative) return static_cast<Label>(i);
    }
    return static_cast<Label>(last_positive);
}

}  // namespace

MarginalScoreVector score_examples_kappa(const ProbabilityMatrix& probs, const PenaltyWeightMatrix& weights,
                                         ScorerMode mode, const MonteCarloConfig& mc) {
    const std::size_t n = probs.rows();
    const std::size_t classes = probs.class_count();
    if (n < 2) fail(ErrorCode::InvalidArgument, "kappa scorer needs at least 2 examples");
    if (weights.dimension() != classes) {
        fail(ErrorCode::DimensionMismatch, "penalty matrix dimension differs from class count");
    }
    const LabelVector predicted = probs.argmax();
    const double inv_n_minus_1 = 1.0 / static_cast<double>(n - 1);

    MarginalScoreVector result;
    result.scores.assign(n, 0.0);

    if (mode == ScorerMode::Deterministic) {
        const KappaAggregates agg = expected_kappa_aggregates(probs, predicted, weights);
        for (std::size_t x = 0; x < n; ++x) {
            const auto f = static_cast<std::size_t>(predicted[x]);
            double o = 0.0;
            for (std::size_t i = 0; i < classes; ++i) {
                const double p = probs(x, i);
                if (p == 0.0) continue;
                o += p * leave_one_out_kappa(agg, weights, i, f, inv_n_minus_1);
            }
            result.scores[x] = o;
        }
        return result;
    }

    check_samples(mc);
    LabelVector sampled(n);
    for (std::size_t m = 0; m < mc.samples; ++m) {
        Rng rng(mc.seed, m);
        for (std::size_t x = 0; x < n; ++x) sampled[x] = sample_class(probs.row(x), rng);
        const KappaAggregates agg = kappa_aggregates(predicted, sampled, weights);
        for (std::size_t x = 0; x < n; ++x) {
            result.scores[x] += leave_one_out_kappa(agg, weights, static_cast<std::size_t>(sampled[x]),
                                                    static_cast<std::size_t>(predicted[x]), inv_n_minus_1);
        }
    }
    for (double& o : result.scores) o /= static_cast<double>(mc.samples);
    return result;
}

}  // namespace abstain
