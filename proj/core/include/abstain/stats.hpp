#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace abstain {

struct RankCorrelation {
    double spearman = 0.0;
    double pearson = 0.0;
};

double pearson_correlation(std::span<const double> a, std::span<const double> b);

// 1-based ranks; tied values share their mean rank.
std::vector<double> average_ranks(std::span<const double> values);

// Pearson on values and Pearson on average ranks. Throws ZeroVariance for a
// constant input and InvalidArgument for fewer than 3 pairs.
RankCorrelation rank_correlations(std::span<const double> a, std::span<const double> b);

struct WilcoxonResult {
    double p_value = 1.0;
    double statistic = 0.0;  // W+, sum of ranks of positive differences
    std::size_t n = 0;       // pairs after dropping zero differences
    bool exact = true;
};

inline constexpr std::size_t kWilcoxonExactLimit = 20;
inline constexpr std::size_t kWilcoxonMinPairs = 5;

// One-sided signed-rank test of H1: differences tend to be positive.
// p = P(W+ >= observed) under the null. Exact null distribution for
// n <= 20 (ties handled through doubled average ranks), normal approximation
// with continuity and tie correction above that.
WilcoxonResult wilcoxon_signed_rank_one_sided(std::span<const double> differences);

}  // namespace abstain
