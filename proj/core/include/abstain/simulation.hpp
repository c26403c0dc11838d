#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "abstain/types.hpp"

namespace abstain {

// Two Gaussian classes: y ~ Bernoulli(positive_prior), x ~ N(mu_y, sigma_y).
struct BinarySimConfig {
    double positive_prior = 0.1;
    double mu_pos = 2.0;
    double mu_neg = -1.0;
    double sigma_pos = 1.0;
    double sigma_neg = 2.0;
    std::size_t n = 10000;
    std::uint64_t seed = 0;

    void validate() const;
};

// C Gaussian classes: y ~ Categorical(priors), v ~ N(means[y], sigmas[y]).
struct MulticlassSimConfig {
    PriorEstimate priors;
    std::vector<double> means;
    std::vector<double> sigmas;
    std::size_t n = 10000;
    std::uint64_t seed = 0;

    void validate() const;
};

struct BinarySimulation {
    std::vector<double> posteriors;
    LabelVector labels;
    std::vector<double> raw_values;
};

struct MulticlassSimulation {
    ProbabilityMatrix posteriors;
    LabelVector labels;
    std::vector<double> raw_values;
};

// The configuration behind the sens@90%-spec illustration: q = 0.1,
// mu- = -1, mu+ = 2, sigma- = 2, sigma+ = 1, n = 10000.
BinarySimConfig figure1_config(std::uint64_t seed);

// Four-class convergence setup: priors 0.4/0.3/0.2/0.1, means -8/-3/3/4,
// sigmas 4/3/3/2, n = 10000.
MulticlassSimConfig kappa_convergence_config(std::uint64_t seed);

// Analytic posterior P(y = 1 | x), evaluated via log densities.
double binary_posterior(double x, const BinarySimConfig& cfg);
std::vector<double> multiclass_posterior(double v, const MulticlassSimConfig& cfg);

BinarySimulation simulate_binary(const BinarySimConfig& cfg);
MulticlassSimulation simulate_multiclass(const MulticlassSimConfig& cfg);

// q ~ U[0.1, 0.9), mu+ ~ U[0, 5), mu- ~ U[mu+ - 5, mu+), sigma+/- ~ U[1, 5),
// n = 1000. The returned config carries a data seed derived from `seed`.
BinarySimConfig sample_random_binary_config(std::uint64_t seed);

struct ShiftedSample {
    std::vector<std::size_t> source_indices;  // into the source arrays, grouped by class
    LabelVector labels;
    std::vector<std::size_t> class_counts;
};

// Draw m examples with class counts given by largest-remainder rounding of
// m * target_priors; within a class, examples are drawn uniformly with
// replacement.
ShiftedSample resample_with_shift(std::span<const Label> labels, const PriorEstimate& target_priors, std::size_t m,
                                  std::uint64_t seed);

// Largest-remainder apportionment of m over the given proportions.
std::vector<std::size_t> apportion(std::span<const double> proportions, std::size_t m);

nlohmann::json to_json(const BinarySimConfig& cfg);
nlohmann::json to_json(const MulticlassSimConfig& cfg);
BinarySimConfig binary_config_from_json(const nlohmann::json& j);
MulticlassSimConfig multiclass_config_from_json(const nlohmann::json& j);

}  // namespace abstain
