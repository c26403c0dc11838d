#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "abstain/simulation.hpp"
#include "test_util.hpp"

using namespace abstain;

TEST_CASE("binary posterior limits") {
    BinarySimConfig same{0.3, 1.0, 1.0, 2.0, 2.0, 10, 0};
    for (double x : {-5.0, 0.0, 3.0}) CHECK(binary_posterior(x, same) == doctest::Approx(0.3).epsilon(1e-14));
    BinarySimConfig sym{0.5, 1.0, -1.0, 1.0, 1.0, 10, 0};
    CHECK(binary_posterior(0.0, sym) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(binary_posterior(1.3, sym) == doctest::Approx(1.0 - binary_posterior(-1.3, sym)).epsilon(1e-14));
    // Direct density ratio for the default configuration.
    auto cfg = figure1_config(0);
    for (double x : {-4.0, 0.5, 2.0, 6.0}) {
        const double fp = std::exp(-0.5 * std::pow((x - 2.0) / 1.0, 2)) / 1.0;
        const double fn = std::exp(-0.5 * std::pow((x + 1.0) / 2.0, 2)) / 2.0;
        CHECK(binary_posterior(x, cfg) == doctest::Approx(0.1 * fp / (0.1 * fp + 0.9 * fn)).epsilon(1e-12));
    }
    // Far tails stay finite and inside [0, 1].
    for (double x : {-200.0, 200.0}) {
        const double p = binary_posterior(x, cfg);
        CHECK(std::isfinite(p));
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
}

TEST_CASE("simulated binary data concentrates on its configuration") {
    auto sim = simulate_binary(figure1_config(3));
    REQUIRE(sim.labels.size() == 10000);
    double pos = 0, sum_pos = 0, sum_neg = 0;
    for (std::size_t i = 0; i < sim.labels.size(); ++i) {
        if (sim.labels[i] == 1) {
            pos += 1;
            sum_pos += sim.raw_values[i];
        } else {
            sum_neg += sim.raw_values[i];
        }
    }
    CHECK(std::abs(pos / 10000.0 - 0.1) < 0.015);
    CHECK(std::abs(sum_pos / pos - 2.0) < 0.15);
    CHECK(std::abs(sum_neg / (10000.0 - pos) + 1.0) < 0.1);
}

TEST_CASE("analytic posteriors are calibrated") {
    auto cfg = figure1_config(4);
    cfg.n = 100000;
    cfg.positive_prior = 0.4;
    auto sim = simulate_binary(cfg);
    std::vector<double> count(10), mean_p(10), mean_y(10);
    for (std::size_t i = 0; i < cfg.n; ++i) {
        const auto b = std::min<std::size_t>(9, static_cast<std::size_t>(sim.posteriors[i] * 10));
        count[b] += 1;
        mean_p[b] += sim.posteriors[i];
        mean_y[b] += sim.labels[i];
    }
    for (std::size_t b = 0; b < 10; ++b) {
        if (count[b] < 1000) continue;
        const double p = mean_p[b] / count[b];
        const double se = std::sqrt(p * (1 - p) / count[b]);
        CHECK(std::abs(mean_y[b] / count[b] - p) < 4 * se + 1e-3);
    }
}

TEST_CASE("multiclass simulation") {
    auto cfg = kappa_convergence_config(5);
    auto sim = simulate_multiclass(cfg);
    REQUIRE(sim.posteriors.rows() == 10000);
    REQUIRE(sim.posteriors.class_count() == 4);
    std::vector<double> freq(4);
    for (auto y : sim.labels) freq[static_cast<std::size_t>(y)] += 1.0 / 10000.0;
    for (std::size_t c = 0; c < 4; ++c) CHECK(std::abs(freq[c] - cfg.priors[c]) < 0.02);
    for (std::size_t x = 0; x < 100; ++x) {
        double total = 0.0;
        for (double v : sim.posteriors.row(x)) total += v;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }

    MulticlassSimConfig two{PriorEstimate({0.7, 0.3}), {-1.0, 2.0}, {2.0, 1.0}, 10, 0};
    BinarySimConfig bin{0.3, 2.0, -1.0, 1.0, 2.0, 10, 0};
    for (double v : {-3.0, 0.0, 1.0, 4.0}) {
        CHECK(multiclass_posterior(v, two)[1] == doctest::Approx(binary_posterior(v, bin)).epsilon(1e-12));
    }
}

TEST_CASE("random configurations") {
    for (std::uint64_t s = 0; s < 200; ++s) {
        auto c = sample_random_binary_config(s);
        CHECK(c.positive_prior >= 0.1);
        CHECK(c.positive_prior < 0.9);
        CHECK(c.mu_pos >= 0.0);
        CHECK(c.mu_pos < 5.0);
        CHECK(c.mu_neg >= c.mu_pos - 5.0);
        CHECK(c.mu_neg <= c.mu_pos);
        CHECK(c.sigma_pos >= 1.0);
        CHECK(c.sigma_neg < 5.0);
        CHECK(c.n == 1000);
    }
    auto a = sample_random_binary_config(11), b = sample_random_binary_config(11);
    CHECK(to_json(a) == to_json(b));
    CHECK(simulate_binary(a).posteriors == simulate_binary(b).posteriors);
    CHECK(simulate_binary(a).posteriors != simulate_binary(sample_random_binary_config(12)).posteriors);

    double mean_q = 0.0;
    for (std::uint64_t s = 0; s < 10000; ++s) mean_q += sample_random_binary_config(s).positive_prior / 10000.0;
    CHECK(std::abs(mean_q - 0.5) < 0.01);
}

TEST_CASE("resampling with a prior shift") {
    LabelVector y(9000);
    for (std::size_t i = 0; i < 9000; ++i) y[i] = i % 3 == 0 ? 1 : 0;
    auto s = resample_with_shift(y, PriorEstimate({0.5, 0.5}), 9000, 1);
    CHECK(s.class_counts == std::vector<std::size_t>{4500, 4500});
    auto t = resample_with_shift(y, PriorEstimate({2.0 / 3.0, 1.0 / 3.0}), 9000, 1);
    CHECK(t.class_counts == std::vector<std::size_t>{6000, 3000});
    for (std::size_t k = 0; k < t.labels.size(); ++k) CHECK(y[t.source_indices[k]] == t.labels[k]);

    auto z = resample_with_shift(y, PriorEstimate({1.0, 0.0}), 100, 2);
    CHECK(z.class_counts == std::vector<std::size_t>{100, 0});
    CHECK_ERROR(resample_with_shift(LabelVector(10, 0), PriorEstimate({0.5, 0.5}), 10, 3), EmptyClass);
    CHECK(apportion(std::vector<double>{0.3, 0.3, 0.4}, 10) == std::vector<std::size_t>{3, 3, 4});
    CHECK(apportion(std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3}, 10) == std::vector<std::size_t>{4, 3, 3});
}

TEST_CASE("config validation and JSON") {
    auto cfg = figure1_config(1);
    auto back = binary_config_from_json(to_json(cfg));
    CHECK(to_json(back) == to_json(cfg));
    cfg.sigma_pos = 0.0;
    CHECK_ERROR(simulate_binary(cfg), InvalidConfig);
    cfg = figure1_config(1);
    cfg.positive_prior = 1.0;
    CHECK_ERROR(cfg.validate(), InvalidConfig);
    auto m = kappa_convergence_config(2);
    m.sigmas.pop_back();
    CHECK_ERROR(simulate_multiclass(m), InvalidConfig);
    CHECK_ERROR(binary_config_from_json(nlohmann::json{{"mu_pos", "high"}}), SchemaError);
}
