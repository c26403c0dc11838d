#include "abstain/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "abstain/error.hpp"

namespace abstain {

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) fail(ErrorCode::DimensionMismatch, "correlation inputs differ in length");
    if (a.size() < 3) fail(ErrorCode::InvalidArgument, "correlation needs at least 3 pairs");
    const double n = static_cast<double>(a.size());
    const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - mean_a;
        const double db = b[i] - mean_b;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa == 0.0 || sbb == 0.0) fail(ErrorCode::ZeroVariance, "correlation input has zero variance");
    return sab / std::sqrt(saa * sbb);
}

std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
    std::vector<double> ranks(values.size());
    std::size_t k = 0;
    while (k < order.size()) {
        std::size_t end = k + 1;
        while (end < order.size() && values[order[end]] == values[order[k]]) ++end;
        const double mean_rank = 0.5 * static_cast<double>(k + 1 + end);
        for (std::size_t r = k; r < end; ++r) ranks[order[r]] = mean_rank;
        k = end;
    }
    return ranks;
}

RankCorrelation rank_correlations(std::span<const double> a, std::span<const double> b) {
    RankCorrelation out;
    out.pearson = pearson_correlation(a, b);
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    out.spearman = pearson_correlation(ra, rb);
    return out;
}

namespace {

double normal_upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

WilcoxonResult wilcoxon_signed_rank_one_sided(std::span<const double> differences) {
    std::vector<double> nonzero;
    for (double d : differences) {
        if (d != 0.0) nonzero.push_back(d);
    }
    const std::size_t n = nonzero.size();
    if (n < kWilcoxonMinPairs) fail(ErrorCode::TooFewPairs, "Wilcoxon test needs at least 5 nonzero differences");

    std::vector<double> magnitudes(n);
    for (std::size_t i = 0; i < n; ++i) magnitudes[i] = std::abs(nonzero[i]);
    const std::vector<double> ranks = average_ranks(magnitudes);

    WilcoxonResult res;
    res.n = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (nonzero[i] > 0.0) res.statistic += ranks[i];
    }

    if (n <= kWilcoxonExactLimit) {
        // Average ranks are multiples of 1/2, so doubled ranks are integers and
        // the null distribution of 2 W+ is a subset-sum count over 2^n signs.
        std::vector<std::size_t> doubled(n);
        std::size_t total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            doubled[i] = static_cast<std::size_t>(std::llround(2.0 * ranks[i]));
            total += doubled[i];
        }
        std::vector<double> ways(total + 1, 0.0);
        ways[0] = 1.0;
        for (std::size_t r : doubled) {
            for (std::size_t s = total; s >= r; --s) {
                ways[s] += ways[s - r];
                if (s == r) break;
            }
        }
        const auto observed = static_cast<std::size_t>(std::llround(2.0 * res.statistic));
        double tail = 0.0;
        for (std::size_t s = observed; s <= total; ++s) tail += ways[s];
        res.p_value = std::min(1.0, tail / std::ldexp(1.0, static_cast<int>(n)));
        res.exact = true;
        return res;
    }

    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    double variance = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
    // Tie correction: subtract sum(t^3 - t) / 48 over tie groups.
    std::vector<double> sorted = magnitudes;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 0; k < n;) {
        std::size_t end = k + 1;
        while (end < n && sorted[end] == sorted[k]) ++end;
        const double t = static_cast<double>(end - k);
        variance -= (t * t * t - t) / 48.0;
        k = end;
    }
    const double z = (res.statistic - mean - 0.5) / std::sqrt(variance);
    res.p_value = std::clamp(normal_upper_tail(z), 0.0, 1.0);
    res.exact = false;
    return res;
}

}  // namespace abstain
