#include "abstain/fumera.hpp"

#include <algorithm>
#include <cmath>

#include "abstain/error.hpp"
#include "abstain/selection.hpp"

namespace abstain {

std::vector<double> ThresholdGrid::values() const {
    if (points < 2) fail(ErrorCode::InvalidArgument, "threshold grid needs at least 2 points");
    std::vector<double> v(points);
    for (std::size_t k = 0; k < points; ++k) v[k] = static_cast<double>(k) / static_cast<double>(points - 1);
    return v;
}

std::vector<std::size_t> apply_class_thresholds(const ProbabilityMatrix& probs, std::span<const double> thresholds) {
    if (thresholds.size() != probs.class_count()) {
        fail(ErrorCode::DimensionMismatch, "one threshold per class is required");
    }
    const LabelVector top = probs.argmax();
    std::vector<std::size_t> out;
    for (std::size_t x = 0; x < probs.rows(); ++x) {
        const auto c = static_cast<std::size_t>(top[x]);
        if (probs(x, c) < thresholds[c]) out.push_back(x);
    }
    return out;
}

namespace {

// For one class: the grid thresholds that change the abstained subset, paired
// with how many of that class's examples each one abstains on. Only the
// smallest threshold per distinct count is kept, since equal subsets tie and
// the lexicographically smaller tuple wins.
struct ClassCandidates {
    std::vector<double> thresholds;
    std::vector<std::size_t> counts;
};

ClassCandidates class_candidates(std::vector<double> confidences, std::span<const double> grid) {
    std::sort(confidences.begin(), confidences.end());
    ClassCandidates cc;
    for (double t : grid) {
        const auto count = static_cast<std::size_t>(
            std::lower_bound(confidences.begin(), confidences.end(), t) - confidences.begin());
        if (cc.counts.empty() || cc.counts.back() != count) {
            cc.thresholds.push_back(t);
            cc.counts.push_back(count);
        }
    }
    return cc;
}

}  // namespace

FumeraResult fumera_threshold_search(const ProbabilityMatrix& val_probs, std::span<const Label> val_labels,
                                     const MetricSpec& metric, double max_fraction, const ThresholdGrid& grid) {
    const std::size_t n = val_probs.rows();
    const std::size_t classes = val_probs.class_count();
    if (val_labels.size() != n) fail(ErrorCode::DimensionMismatch, "validation labels differ in length");
    const std::size_t max_abstain = budget_count(max_fraction, n);
    const std::vector<double> grid_values = grid.values();

    const LabelVector top = val_probs.argmax();
    std::vector<std::vector<double>> confidences(classes);
    for (std::size_t x = 0; x < n; ++x) {
        const auto c = static_cast<std::size_t>(top[x]);
        confidences[c].push_back(val_probs(x, c));
    }
    std::vector<ClassCandidates> candidates;
    candidates.reserve(classes);
    for (std::size_t c = 0; c < classes; ++c) candidates.push_back(class_candidates(confidences[c], grid_values));

    FumeraResult best;
    best.thresholds.assign(classes, 0.0);
    bool found = false;

    std::vector<std::size_t> pos(classes, 0);
    std::vector<double> tuple(classes);
    while (true) {
        std::size_t abstained = 0;
        for (std::size_t c = 0; c < classes; ++c) {
            tuple[c] = candidates[c].thresholds[pos[c]];
            abstained += candidates[c].counts[pos[c]];
        }
        if (abstained <= max_abstain) {
            const std::vector<std::size_t> dropped = apply_class_thresholds(val_probs, tuple);
            try {
                const double value = evaluate_metric(metric, val_probs, val_labels, dropped);
                const bool better = !found || value > best.metric_value ||
                                    (value == best.metric_value && abstained < best.abstained);
                if (better) {
                    best.thresholds = tuple;
                    best.metric_value = value;
                    best.abstained = abstained;
                    found = true;
                }
            } catch (const Error& e) {
                if (e.code() != ErrorCode::NoPositives && e.code() != ErrorCode::NoNegatives &&
                    e.code() != ErrorCode::DegenerateDenominator && e.code() != ErrorCode::InvalidArgument) {
                    throw;
                }
            }
        }
        // Odometer with class 0 most significant, so tuples arrive in
        // lexicographic order and the first of any tie is kept.
        std::size_t c = classes;
        while (c > 0) {
            --c;
            if (++pos[c] < candidates[c].thresholds.size()) break;
            pos[c] = 0;
            if (c == 0) {
                c = classes + 1;
                break;
            }
        }
        if (c == classes + 1) break;
    }

    if (!found) {
        // No tuple within budget admits a defined metric; abstain on nothing.
        best.thresholds.assign(classes, 0.0);
        best.abstained = 0;
        best.metric_value = 0.0;
    }
    return best;
}

}  // namespace abstain
