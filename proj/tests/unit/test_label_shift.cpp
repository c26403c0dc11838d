#include <doctest.h>

#include <cmath>

#include "abstain/label_shift.hpp"
#include "abstain/rng.hpp"
#include "abstain/simulation.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace abstain;

TEST_CASE("posteriors with mean equal to the training priors are a fixed point") {
    // Rows [0.2,0.8] and [0.6,0.4] average to [0.4,0.6].
    auto P = ProbabilityMatrix::from_binary(std::vector<double>{0.8, 0.4});
    auto r = adapt_label_shift_em(P, PriorEstimate({0.4, 0.6}));
    CHECK(r.converged);
    CHECK(r.iterations == 1);
    CHECK(r.test_priors[1] == doctest::Approx(0.6).epsilon(1e-12));
    for (std::size_t i = 0; i < P.entries().size(); ++i) {
        CHECK(r.adapted_probs.entries()[i] == doctest::Approx(P.entries()[i]).epsilon(1e-12));
    }
}

TEST_CASE("EM recovers a 1:2 shift on simulated data") {
    auto cfg = figure1_config(7);
    cfg.positive_prior = 0.5;
    cfg.n = 40000;
    auto sim = simulate_binary(cfg);
    auto shifted = resample_with_shift(sim.labels, PriorEstimate({2.0 / 3.0, 1.0 / 3.0}), 15000, 8);
    std::vector<double> p;
    for (auto i : shifted.source_indices) p.push_back(sim.posteriors[i]);
    auto r = adapt_label_shift_em(ProbabilityMatrix::from_binary(p), PriorEstimate({0.5, 0.5}));
    CHECK(r.converged);
    CHECK(std::abs(r.test_priors[1] - 1.0 / 3.0) < 0.02);
}

TEST_CASE("one-hot posteriors give empirical frequencies after one step") {
    std::vector<double> e = {1, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 1, 0, 1, 0};
    ProbabilityMatrix P(5, 3, e);
    auto r = adapt_label_shift_em(P, PriorEstimate({0.2, 0.3, 0.5}), 1e-6, 1);
    CHECK(r.iterations == 1);
    CHECK(r.test_priors[0] == doctest::Approx(0.2));
    CHECK(r.test_priors[1] == doctest::Approx(0.6));
    CHECK(r.test_priors[2] == doctest::Approx(0.2));
}

TEST_CASE("adapted rows stay on the simplex and the cap is reported") {
    Rng rng(9);
    auto P = oracle::random_probability_matrix(rng, 300, 4);
    auto r = adapt_label_shift_em(P, PriorEstimate({0.1, 0.2, 0.3, 0.4}), 1e-15, 3);
    CHECK(r.iterations == 3);
    CHECK_FALSE(r.converged);
    for (std::size_t x = 0; x < P.rows(); ++x) {
        double total = 0.0;
        for (double v : r.adapted_probs.row(x)) {
            CHECK(v >= 0.0);
            total += v;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
    double total = 0.0;
    for (double v : r.test_priors.values()) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("reweighting matches Bayes' rule") {
    auto P = ProbabilityMatrix::from_binary(std::vector<double>{0.3});
    auto Q = reweight_priors(P, PriorEstimate({0.5, 0.5}), PriorEstimate({0.25, 0.75}));
    const double expect = 0.3 * 0.75 / (0.3 * 0.75 + 0.7 * 0.25);
    CHECK(Q(0, 1) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("errors") {
    auto P = ProbabilityMatrix::from_binary(std::vector<double>{0.3, 0.6});
    CHECK_ERROR(adapt_label_shift_em(P, PriorEstimate({0.0, 1.0})), NonpositiveTrainPrior);
    CHECK_ERROR(adapt_label_shift_em(P, PriorEstimate({0.2, 0.3, 0.5})), DimensionMismatch);
    CHECK_ERROR(adapt_label_shift_em(P, PriorEstimate({0.5, 0.5}), 1e-6, 0), InvalidArgument);
}
