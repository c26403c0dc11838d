#include <doctest.h>

#include <algorithm>

#include "abstain/metrics.hpp"
#include "abstain/rng.hpp"
#include "abstain/simulation.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace abstain;

namespace {

LabelVector random_labels(Rng& rng, std::size_t n, double q) {
    LabelVector y(n);
    do {
        for (auto& v : y) v = rng.bernoulli(q) ? 1 : 0;
    } while (std::count(y.begin(), y.end(), 1) == 0 || std::count(y.begin(), y.end(), 0) == 0);
    return y;
}

}  // namespace

TEST_CASE("sensitivity at specificity: hand examples") {
    CHECK(sensitivity_at_specificity(SortedPredictionSet({0.1, 0.2, 0.8, 0.9}, LabelVector{0, 0, 1, 1}), 0.5) == 1.0);
    CHECK(sensitivity_at_specificity(SortedPredictionSet({0.1, 0.4, 0.6, 0.9}, LabelVector{0, 1, 0, 1}), 0.99) == 0.5);
}

TEST_CASE("sensitivity at specificity: errors") {
    CHECK_ERROR(sensitivity_at_specificity(LabelVector{0, 0}, 0.5), NoPositives);
    CHECK_ERROR(sensitivity_at_specificity(LabelVector{1, 1}, 0.5), NoNegatives);
    CHECK_ERROR(sensitivity_at_specificity(LabelVector{0, 1}, 0.0), InvalidSpecificity);
    CHECK_ERROR(sensitivity_at_specificity(LabelVector{0, 1}, 1.0), InvalidSpecificity);
    CHECK_ERROR(sensitivity_at_specificity(SortedPredictionSet({0.1, 0.2}), 0.5), InvalidArgument);
}

TEST_CASE("sensitivity at specificity matches a threshold scan on simulated data") {
    auto cfg = figure1_config(0);
    cfg.n = 1000;
    auto sim = simulate_binary(cfg);
    auto sorted = SortedPredictionSet::from_unsorted(sim.posteriors, std::span<const Label>(sim.labels));
    LabelVector y(sorted.labels().begin(), sorted.labels().end());
    CHECK(sensitivity_at_specificity(sorted, 0.9) == oracle::scan_sens_at_spec(y, 0.9));
}

TEST_CASE("sensitivity at specificity: scan oracle and monotonicity on random instances") {
    Rng rng(11);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 2 + rng.below(120);
        auto y = random_labels(rng, n, 0.1 + 0.8 * rng.uniform());
        double prev = 1.0;
        for (double s : {0.05, 0.3, 0.5, 0.77, 0.9, 0.95, 0.999}) {
            const double v = sensitivity_at_specificity(y, s);
            CHECK(v == oracle::scan_sens_at_spec(y, s));
            CHECK(v <= prev);
            prev = v;
        }
    }
}

TEST_CASE("auroc: trivial rankings and errors") {
    CHECK(auroc(LabelVector{0, 0, 1, 1}) == 1.0);
    CHECK(auroc(LabelVector{1, 1, 0, 0}) == 0.0);
    CHECK_ERROR(auroc(LabelVector{0, 0}), NoPositives);
    CHECK_ERROR(auroc(LabelVector{1}), NoNegatives);
}

TEST_CASE("auroc equals the pairwise oracle exactly for N <= 200") {
    Rng rng(5);
    for (int rep = 0; rep < 300; ++rep) {
        const std::size_t n = 2 + rng.below(199);
        auto y = random_labels(rng, n, rng.uniform());
        CHECK(auroc(y) == oracle::pairwise_auroc(y));
    }
}

TEST_CASE("auroc under label flips and reflection") {
    Rng rng(6);
    for (int rep = 0; rep < 100; ++rep) {
        auto p = oracle::random_sorted_probs(rng, 50);
        auto y = random_labels(rng, 50, 0.4);
        LabelVector flipped(y);
        for (auto& v : flipped) v = 1 - v;
        // Reflecting p -> 1 - p reverses the order; with swapped classes the ranking is unchanged.
        std::vector<double> q(p.rbegin(), p.rend());
        for (auto& v : q) v = 1.0 - v;
        LabelVector z(flipped.rbegin(), flipped.rend());
        const double a = auroc(SortedPredictionSet(p, y));
        CHECK(a + auroc(SortedPredictionSet(p, flipped)) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(auroc(SortedPredictionSet(q, z)) == doctest::Approx(a).epsilon(1e-12));
    }
}

TEST_CASE("suffix counts invariants") {
    Rng rng(3);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 1 + rng.below(80);
        LabelVector y(n);
        for (auto& v : y) v = rng.bernoulli(0.3) ? 1 : 0;
        const std::size_t d = rng.below(n + 1);
        auto sc = compute_suffix_counts(y, d);
        CHECK(sc.pos_suffix[0] + sc.neg_suffix[0] == static_cast<std::int64_t>(n));
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(sc.pos_suffix[i] >= sc.pos_suffix[i + 1]);
            CHECK(sc.pos_prefix[i] <= sc.pos_prefix[i + 1]);
            CHECK(sc.neg_prefix[i] <= sc.neg_prefix[i + 1]);
        }
        for (std::size_t i = 0; i + d <= n; ++i) {
            CHECK(sc.window_pos[i] == sc.pos_suffix[i] - sc.pos_suffix[i + d]);
            CHECK(sc.window_neg[i] == sc.neg_suffix[i] - sc.neg_suffix[i + d]);
        }
    }
}

TEST_CASE("weighted kappa: perfect agreement") {
    auto W = PenaltyWeightMatrix::quadratic(5);
    LabelVector y = {0, 1, 4, 2, 2, 3, 1};
    CHECK(weighted_kappa(y, y, W) == 1.0);
}

TEST_CASE("weighted kappa: hand instance against the formula oracle") {
    auto W = PenaltyWeightMatrix::quadratic(5);
    LabelVector truth = {0, 1, 2, 4, 3, 1};
    LabelVector pred = {0, 2, 2, 3, 1, 1};
    // a = 0+1+0+1+4+0 = 6, N^i = [1,2,1,1,1], F^j = [1,2,2,1,0].
    const double expected = oracle::kappa_formula(pred, truth, 5, W);
    CHECK(weighted_kappa(pred, truth, W) == doctest::Approx(expected).epsilon(1e-14));
    double den = 0.0;
    const double Ni[] = {1, 2, 1, 1, 1};
    const double Fj[] = {1, 2, 2, 1, 0};
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) den += (i - j) * (i - j) * Ni[i] / 6.0 * Fj[j];
    }
    CHECK(expected == doctest::Approx(1.0 - 6.0 / den).epsilon(1e-14));
}

TEST_CASE("weighted kappa: constant prediction and degenerate denominator") {
    auto W = PenaltyWeightMatrix::quadratic(3);
    LabelVector truth = {0, 1, 2, 2, 1};
    LabelVector pred = {1, 1, 1, 1, 1};
    CHECK(weighted_kappa(pred, truth, W) == doctest::Approx(oracle::kappa_formula(pred, truth, 3, W)).epsilon(1e-14));
    LabelVector same = {2, 2, 2};
    CHECK_ERROR(weighted_kappa(same, same, W), DegenerateDenominator);
}

TEST_CASE("weighted kappa is invariant under a joint class permutation") {
    Rng rng(9);
    const std::size_t C = 4;
    std::vector<double> w(C * C);
    for (auto& v : w) v = rng.uniform(0.0, 3.0);
    for (std::size_t i = 0; i < C; ++i) w[i * C + i] = 0.0;
    PenaltyWeightMatrix W(C, w);
    const std::vector<std::size_t> perm = {2, 0, 3, 1};
    std::vector<double> wp(C * C);
    for (std::size_t i = 0; i < C; ++i) {
        for (std::size_t j = 0; j < C; ++j) wp[perm[i] * C + perm[j]] = w[i * C + j];
    }
    PenaltyWeightMatrix Wp(C, wp);
    for (int rep = 0; rep < 50; ++rep) {
        LabelVector t(30), f(30), tp(30), fp(30);
        for (std::size_t x = 0; x < 30; ++x) {
            t[x] = static_cast<Label>(rng.below(C));
            f[x] = static_cast<Label>(rng.below(C));
            tp[x] = static_cast<Label>(perm[t[x]]);
            fp[x] = static_cast<Label>(perm[f[x]]);
        }
        CHECK(weighted_kappa(f, t, W) == doctest::Approx(weighted_kappa(fp, tp, Wp)).epsilon(1e-12));
    }
}

TEST_CASE("kappa aggregates invariants") {
    Rng rng(21);
    auto P = oracle::random_probability_matrix(rng, 40, 3);
    auto W = PenaltyWeightMatrix::quadratic(3);
    auto f = P.argmax();
    auto agg = expected_kappa_aggregates(P, f, W);
    double sum_f = 0.0, sum_n = 0.0;
    for (double v : agg.class_pred_counts) sum_f += v;
    for (double v : agg.class_true_counts) sum_n += v;
    CHECK(sum_f == 40.0);
    CHECK(sum_n == doctest::Approx(40.0).epsilon(1e-9));

    LabelVector t(40);
    for (auto& v : t) v = static_cast<Label>(rng.below(3));
    auto hard = kappa_aggregates(f, t, W);
    sum_n = 0.0;
    for (double v : hard.class_true_counts) sum_n += v;
    CHECK(sum_n == 40.0);
}
