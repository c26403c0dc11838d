#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "abstain/baselines.hpp"
#include "abstain/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace abstain;

namespace {

double direct_jsd(const std::vector<double>& p, const std::vector<double>& q) {
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double m = 0.5 * (p[i] + q[i]);
        if (p[i] > 0) d += 0.5 * p[i] * std::log(p[i] / m);
        if (q[i] > 0) d += 0.5 * q[i] * std::log(q[i] / m);
    }
    return d;
}

std::vector<std::size_t> order_by(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
    return idx;
}

}  // namespace

TEST_CASE("uniform row has the maximal entropy priority") {
    Rng rng(1);
    auto P = oracle::random_probability_matrix(rng, 30, 4);
    std::vector<double> e(P.entries().begin(), P.entries().end());
    e.insert(e.end(), {0.25, 0.25, 0.25, 0.25});
    ProbabilityMatrix Q(31, 4, e);
    auto s = baseline_scores(Q, BaselineMethod::Entropy);
    CHECK(s[30] == doctest::Approx(std::log(4.0)).epsilon(1e-14));
    CHECK(*std::max_element(s.begin(), s.end()) == s[30]);
    CHECK(entropy(std::vector<double>{1.0, 0.0}) == 0.0);
}

TEST_CASE("row equal to the priors has JSD zero and the top priority") {
    Rng rng(2);
    auto P = oracle::random_probability_matrix(rng, 20, 3);
    std::vector<double> e(P.entries().begin(), P.entries().end());
    e.insert(e.end(), {0.2, 0.3, 0.5});
    ProbabilityMatrix Q(21, 3, e);
    PriorEstimate priors({0.2, 0.3, 0.5});
    auto s = baseline_scores(Q, BaselineMethod::JsDivergenceFromPriors, priors);
    CHECK(s[20] == 0.0);
    CHECK(*std::max_element(s.begin(), s.end()) == 0.0);
}

TEST_CASE("JS priority matches a direct divergence evaluation") {
    auto P = ProbabilityMatrix::from_binary(std::vector<double>{0.5, 0.1});  // rows [0.5,0.5], [0.9,0.1]
    PriorEstimate priors({0.1, 0.9});
    auto s = baseline_scores(P, BaselineMethod::JsDivergenceFromPriors, priors);
    const double d0 = direct_jsd({0.5, 0.5}, {0.1, 0.9});
    const double d1 = direct_jsd({0.9, 0.1}, {0.1, 0.9});
    CHECK(s[0] == doctest::Approx(-d0).epsilon(1e-14));
    CHECK(s[1] == doctest::Approx(-d1).epsilon(1e-14));
    CHECK((s[0] > s[1]) == (d0 < d1));

    Rng rng(3);
    auto R = oracle::random_probability_matrix(rng, 50, 4);
    PriorEstimate pr({0.4, 0.3, 0.2, 0.1});
    auto t = baseline_scores(R, BaselineMethod::JsDivergenceFromPriors, pr);
    for (std::size_t x = 0; x < 50; ++x) {
        std::vector<double> row(R.row(x).begin(), R.row(x).end());
        CHECK(t[x] == doctest::Approx(-direct_jsd(row, {0.4, 0.3, 0.2, 0.1})).epsilon(1e-12));
    }
}

TEST_CASE("binary entropy, max-prob and distance-from-0.5 orderings coincide") {
    Rng rng(4);
    std::vector<double> p(200);
    for (auto& v : p) v = rng.uniform();
    auto P = ProbabilityMatrix::from_binary(p);
    std::vector<double> closeness(200);
    for (std::size_t x = 0; x < 200; ++x) closeness[x] = -std::abs(p[x] - 0.5);
    const auto ref = order_by(closeness);
    CHECK(order_by(baseline_scores(P, BaselineMethod::Entropy)) == ref);
    CHECK(order_by(baseline_scores(P, BaselineMethod::MaxClassProb)) == ref);
}

TEST_CASE("external variance passes through and missing inputs are errors") {
    auto P = ProbabilityMatrix::from_binary(std::vector<double>{0.2, 0.6, 0.9});
    std::vector<double> var = {0.3, 0.1, 0.7};
    CHECK(baseline_scores(P, BaselineMethod::ExternalVariance, std::nullopt, std::span<const double>(var)) == var);
    CHECK_ERROR(baseline_scores(P, BaselineMethod::ExternalVariance), MissingVariance);
    CHECK_ERROR(baseline_scores(P, BaselineMethod::JsDivergenceFromPriors), MissingPriors);
    std::vector<double> short_var = {1.0};
    CHECK_ERROR(baseline_scores(P, BaselineMethod::ExternalVariance, std::nullopt, std::span<const double>(short_var)),
                DimensionMismatch);
    CHECK(baseline_scores(P, BaselineMethod::MaxClassProb) == std::vector<double>{-0.8, -0.6, -0.9});
}
