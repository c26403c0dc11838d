#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "abstain/evaluation.hpp"
#include "abstain/types.hpp"

namespace abstain {

// Per-class reject thresholds: abstain on x when p[x, i*] < t[i*] with
// i* = argmax_i p[x, i]. Thresholds are searched exhaustively over an evenly
// spaced grid on [0, 1] to maximise a metric on labelled validation data.
struct ThresholdGrid {
    std::size_t points = 51;
    std::vector<double> values() const;
};

struct FumeraResult {
    std::vector<double> thresholds;
    double metric_value = 0.0;
    std::size_t abstained = 0;
};

// Among threshold tuples abstaining on at most max_fraction of the validation
// set, returns the one maximising the metric on the retained examples. Ties go
// to fewer abstentions, then to the lexicographically smallest tuple. Tuples
// whose retained set makes the metric undefined are skipped. Cost is
// O(prod_c u_c * N), u_c = distinct per-class abstention counts on the grid.
FumeraResult fumera_threshold_search(const ProbabilityMatrix& val_probs, std::span<const Label> val_labels,
                                     const MetricSpec& metric, double max_fraction, const ThresholdGrid& grid = {});

// Indices abstained by a threshold tuple, ascending.
std::vector<std::size_t> apply_class_thresholds(const ProbabilityMatrix& probs, std::span<const double> thresholds);

}  // namespace abstain
