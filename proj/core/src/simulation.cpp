#include "abstain/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>
#include <string>

#include "abstain/error.hpp"
#include "abstain/rng.hpp"

namespace abstain {

namespace {

// log N(x; mu, sigma) up to the shared -0.5 log(2 pi) constant.
double log_density(double x, double mu, double sigma) {
    const double z = (x - mu) / sigma;
    return -0.5 * z * z - std::log(sigma);
}

}  // namespace

void BinarySimConfig::validate() const {
    if (!(positive_prior > 0.0 && positive_prior < 1.0)) fail(ErrorCode::InvalidConfig, "positive_prior must lie in (0, 1)");
    if (!(sigma_pos > 0.0 && sigma_neg > 0.0)) fail(ErrorCode::InvalidConfig, "standard deviations must be positive");
    if (!std::isfinite(mu_pos) || !std::isfinite(mu_neg)) fail(ErrorCode::InvalidConfig, "means must be finite");
    if (n < 1) fail(ErrorCode::InvalidConfig, "n must be at least 1");
}

void MulticlassSimConfig::validate() const {
    const std::size_t classes = priors.size();
    if (classes < 2) fail(ErrorCode::InvalidConfig, "multiclass simulation needs at least 2 classes");
    if (means.size() != classes || sigmas.size() != classes) {
        fail(ErrorCode::InvalidConfig, "means and sigmas must have one entry per class");
    }
    for (double s : sigmas) {
        if (!(s > 0.0)) fail(ErrorCode::InvalidConfig, "standard deviations must be positive");
    }
    if (n < 1) fail(ErrorCode::InvalidConfig, "n must be at least 1");
}

BinarySimConfig figure1_config(std::uint64_t seed) {
    BinarySimConfig cfg;
    cfg.seed = seed;
    return cfg;
}

MulticlassSimConfig kappa_convergence_config(std::uint64_t seed) {
    MulticlassSimConfig cfg;
    cfg.priors = PriorEstimate({0.4, 0.3, 0.2, 0.1});
    cfg.means = {-8.0, -3.0, 3.0, 4.0};
    cfg.sigmas = {4.0, 3.0, 3.0, 2.0};
    cfg.n = 10000;
    cfg.seed = seed;
    return cfg;
}

double binary_posterior(double x, const BinarySimConfig& cfg) {
    const double q = cfg.positive_prior;
    // ratio = phi-(x) / phi+(x); pick the orientation whose exponent is <= 0.
    const double log_ratio = log_density(x, cfg.mu_neg, cfg.sigma_neg) - log_density(x, cfg.mu_pos, cfg.sigma_pos);
    if (log_ratio <= 0.0) {
        const double r = std::exp(log_ratio);
        return q / (q + (1.0 - q) * r);
    }
    const double r = std::exp(-log_ratio);
    return q * r / (q * r + (1.0 - q));
}

std::vector<double> multiclass_posterior(double v, const MulticlassSimConfig& cfg) {
    const std::size_t classes = cfg.priors.size();
    std::vector<double> logp(classes);
    for (std::size_t i = 0; i < classes; ++i) {
        logp[i] = std::log(cfg.priors[i]) + log_density(v, cfg.means[i], cfg.sigmas[i]);
    }
    const double m = *std::max_element(logp.begin(), logp.end());
    double total = 0.0;
    for (double& l : logp) {
        l = std::exp(l - m);
        total += l;
    }
    for (double& l : logp) l /= total;
    return logp;
}

BinarySimulation simulate_binary(const BinarySimConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    BinarySimulation sim;
    sim.posteriors.resize(cfg.n);
    sim.labels.resize(cfg.n);
    sim.raw_values.resize(cfg.n);
    for (std::size_t i = 0; i < cfg.n; ++i) {
        const bool positive = rng.bernoulli(cfg.positive_prior);
        const double x = positive ? rng.normal(cfg.mu_pos, cfg.sigma_pos) : rng.normal(cfg.mu_neg, cfg.sigma_neg);
        sim.labels[i] = positive ? 1 : 0;
        sim.raw_values[i] = x;
        sim.posteriors[i] = binary_posterior(x, cfg);
    }
    return sim;
}

MulticlassSimulation simulate_multiclass(const MulticlassSimConfig& cfg) {
    cfg.validate();
    const std::size_t classes = cfg.priors.size();
    Rng rng(cfg.seed);
    std::vector<double> entries(cfg.n * classes);
    LabelVector labels(cfg.n);
    std::vector<double> raw(cfg.n);
    for (std::size_t x = 0; x < cfg.n; ++x) {
        const double u = rng.uniform();
        double cumulative = 0.0;
        std::size_t y = classes - 1;
        for (std::size_t i = 0; i < classes; ++i) {
            cumulative += cfg.priors[i];
            if (u < cumulative) {
                y = i;
                break;
            }
        }
        // Guard against rounding in the cumulative sum landing on a zero-prior class.
        while (cfg.priors[y] == 0.0 && y > 0) --y;
        const double v = rng.normal(cfg.means[y], cfg.sigmas[y]);
        labels[x] = static_cast<Label>(y);
        raw[x] = v;
        const auto row = multiclass_posterior(v, cfg);
        std::copy(row.begin(), row.end(), entries.begin() + static_cast<std::ptrdiff_t>(x * classes));
    }
    return MulticlassSimulation{ProbabilityMatrix(cfg.n, classes, std::move(entries)), std::move(labels),
                                std::move(raw)};
}

BinarySimConfig sample_random_binary_config(std::uint64_t seed) {
    Rng rng(seed, 0xC0F1EULL);
    BinarySimConfig cfg;
    cfg.positive_prior = rng.uniform(0.1, 0.9);
    cfg.mu_pos = rng.uniform(0.0, 5.0);
    cfg.mu_neg = rng.uniform(cfg.mu_pos - 5.0, cfg.mu_pos);
    cfg.sigma_pos = rng.uniform(1.0, 5.0);
    cfg.sigma_neg = rng.uniform(1.0, 5.0);
    cfg.n = 1000;
    cfg.seed = splitmix64(seed ^ 0x5EED5EED5EEDULL);
    return cfg;
}

std::vector<std::size_t> apportion(std::span<const double> proportions, std::size_t m) {
    const std::size_t k = proportions.size();
    std::vector<std::size_t> counts(k);
    std::vector<double> remainder(k);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const double exact = proportions[i] * static_cast<double>(m);
        counts[i] = static_cast<std::size_t>(std::floor(exact));
        remainder[i] = exact - static_cast<double>(counts[i]);
        assigned += counts[i];
    }
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t r = 0; assigned < m && r < k; ++r) {
        if (proportions[order[r]] > 0.0) {
            ++counts[order[r]];
            ++assigned;
        }
    }
    return counts;
}

ShiftedSample resample_with_shift(std::span<const Label> labels, const PriorEstimate& target_priors, std::size_t m,
                                  std::uint64_t seed) {
    const std::size_t classes = target_priors.size();
    std::vector<std::vector<std::size_t>> by_class(classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const Label y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= classes) fail(ErrorCode::InvalidArgument, "label out of range");
        by_class[static_cast<std::size_t>(y)].push_back(i);
    }
    ShiftedSample out;
    out.class_counts = apportion(target_priors.values(), m);
    for (std::size_t c = 0; c < classes; ++c) {
        if (out.class_counts[c] > 0 && by_class[c].empty()) {
            fail(ErrorCode::EmptyClass, "no source examples of class " + std::to_string(c));
        }
    }
    Rng rng(seed, 0x5A1FULL);
    out.source_indices.reserve(m);
    out.labels.reserve(m);
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t k = 0; k < out.class_counts[c]; ++k) {
            out.source_indices.push_back(by_class[c][rng.below(by_class[c].size())]);
            out.labels.push_back(static_cast<Label>(c));
        }
    }
    return out;
}

nlohmann::json to_json(const BinarySimConfig& cfg) {
    return nlohmann::json{{"positive_prior", cfg.positive_prior}, {"mu_pos", cfg.mu_pos},
                          {"mu_neg", cfg.mu_neg},                 {"sigma_pos", cfg.sigma_pos},
                          {"sigma_neg", cfg.sigma_neg},           {"n", cfg.n},
                          {"seed", cfg.seed}};
}

nlohmann::json to_json(const MulticlassSimConfig& cfg) {
    return nlohmann::json{{"priors", std::vector<double>(cfg.priors.values().begin(), cfg.priors.values().end())},
                          {"means", cfg.means},
                          {"sigmas", cfg.sigmas},
                          {"n", cfg.n},
                          {"seed", cfg.seed}};
}

BinarySimConfig binary_config_from_json(const nlohmann::json& j) {
    try {
        BinarySimConfig cfg;
        cfg.positive_prior = j.at("positive_prior").get<double>();
        cfg.mu_pos = j.at("mu_pos").get<double>();
        cfg.mu_neg = j.at("mu_neg").get<double>();
        cfg.sigma_pos = j.at("sigma_pos").get<double>();
        cfg.sigma_neg = j.at("sigma_neg").get<double>();
        cfg.n = j.at("n").get<std::size_t>();
        cfg.seed = j.value("seed", std::uint64_t{0});
        cfg.validate();
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::SchemaError, std::string("malformed binary simulation config: ") + e.what());
    }
}

MulticlassSimConfig multiclass_config_from_json(const nlohmann::json& j) {
    try {
        MulticlassSimConfig cfg;
        cfg.priors = PriorEstimate(j.at("priors").get<std::vector<double>>());
        cfg.means = j.at("means").get<std::vector<double>>();
        cfg.sigmas = j.at("sigmas").get<std::vector<double>>();
        cfg.n = j.at("n").get<std::size_t>();
        cfg.seed = j.value("seed", std::uint64_t{0});
        cfg.validate();
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::SchemaError, std::string("malformed multiclass simulation config: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidArgument) fail(ErrorCode::InvalidConfig, e.what());
        throw;
    }
}

}  // namespace abstain
