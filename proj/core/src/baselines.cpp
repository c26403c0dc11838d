#include "abstain/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "abstain/error.hpp"

namespace abstain {

namespace {

double kl_to_mixture(std::span<const double> p, std::span<const double> q) {
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        const double mix = 0.5 * (p[i] + q[i]);
        kl += p[i] * std::log(p[i] / mix);
    }
    return kl;
}

}  // namespace

double entropy(std::span<const double> dist) {
    double h = 0.0;
    for (double p : dist) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

double jensen_shannon_divergence(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) fail(ErrorCode::DimensionMismatch, "JSD inputs differ in length");
    return 0.5 * kl_to_mixture(p, q) + 0.5 * kl_to_mixture(q, p);
}

std::vector<double> baseline_scores(const ProbabilityMatrix& probs, BaselineMethod method,
                                    const std::optional<PriorEstimate>& priors,
                                    std::optional<std::span<const double>> variance) {
    const std::size_t n = probs.rows();
    std::vector<double> priority(n);
    switch (method) {
        case BaselineMethod::MaxClassProb:
            for (std::size_t x = 0; x < n; ++x) {
                auto row = probs.row(x);
                priority[x] = -*std::max_element(row.begin(), row.end());
            }
            break;
        case BaselineMethod::Entropy:
            for (std::size_t x = 0; x < n; ++x) priority[x] = entropy(probs.row(x));
            break;
        case BaselineMethod::JsDivergenceFromPriors:
            if (!priors) fail(ErrorCode::MissingPriors, "JS-divergence baseline needs class priors");
            if (priors->size() != probs.class_count()) {
                fail(ErrorCode::DimensionMismatch, "prior length differs from class count");
            }
            for (std::size_t x = 0; x < n; ++x) priority[x] = -jensen_shannon_divergence(probs.row(x), priors->values());
            break;
        case BaselineMethod::ExternalVariance:
            if (!variance) fail(ErrorCode::MissingVariance, "variance baseline needs a per-example variance vector");
            if (variance->size() != n) fail(ErrorCode::DimensionMismatch, "variance length differs from N");
            std::copy(variance->begin(), variance->end(), priority.begin());
            break;
    }
    return priority;
}

std::string_view baseline_name(BaselineMethod method) {
    switch (method) {
        case BaselineMethod::MaxClassProb: return "max_class_prob";
        case BaselineMethod::Entropy: return "entropy";
        case BaselineMethod::JsDivergenceFromPriors: return "js_divergence";
        case BaselineMethod::ExternalVariance: return "external_variance";
    }
    return "unknown";
}

}  // namespace abstain
