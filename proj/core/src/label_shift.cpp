#include "abstain/label_shift.hpp"

#include <algorithm>
#include <cmath>

#include "abstain/error.hpp"

namespace abstain {

namespace {

// q_x(i) ∝ P[x,i] * ratio(i), renormalised per row. Returns the column means.
std::vector<double> reweight_rows(const ProbabilityMatrix& probs, std::span<const double> ratio,
                                  std::vector<double>& out) {
    const std::size_t n = probs.rows();
    const std::size_t classes = probs.class_count();
    out.resize(n * classes);
    std::vector<double> mean(classes, 0.0);
    for (std::size_t x = 0; x < n; ++x) {
        double total = 0.0;
        for (std::size_t i = 0; i < classes; ++i) {
            const double v = probs(x, i) * ratio[i];
            out[x * classes + i] = v;
            total += v;
        }
        if (!(total > 0.0)) fail(ErrorCode::InvalidArgument, "row has zero mass after prior reweighting");
        for (std::size_t i = 0; i < classes; ++i) {
            out[x * classes + i] /= total;
            mean[i] += out[x * classes + i];
        }
    }
    for (double& m : mean) m /= static_cast<double>(n);
    return mean;
}

void check_train_priors(const ProbabilityMatrix& probs, const PriorEstimate& train) {
    if (train.size() != probs.class_count()) fail(ErrorCode::DimensionMismatch, "prior length differs from class count");
    for (double p : train.values()) {
        if (!(p > 0.0)) fail(ErrorCode::NonpositiveTrainPrior, "training priors must be strictly positive");
    }
}

std::vector<double> normalised(std::vector<double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    for (double& x : v) x /= s;
    return v;
}

}  // namespace

ProbabilityMatrix reweight_priors(const ProbabilityMatrix& probs, const PriorEstimate& train_priors,
                                  const PriorEstimate& target_priors) {
    check_train_priors(probs, train_priors);
    if (target_priors.size() != probs.class_count()) fail(ErrorCode::DimensionMismatch, "target prior length mismatch");
    std::vector<double> ratio(probs.class_count());
    for (std::size_t i = 0; i < ratio.size(); ++i) ratio[i] = target_priors[i] / train_priors[i];
    std::vector<double> out;
    reweight_rows(probs, ratio, out);
    return ProbabilityMatrix(probs.rows(), probs.class_count(), std::move(out));
}

LabelShiftResult adapt_label_shift_em(const ProbabilityMatrix& test_probs, const PriorEstimate& train_priors,
                                      double tol, std::size_t max_iter) {
    check_train_priors(test_probs, train_priors);
    if (test_probs.rows() == 0) fail(ErrorCode::InvalidArgument, "label-shift adaptation needs at least one row");
    if (max_iter == 0) fail(ErrorCode::InvalidArgument, "max_iter must be at least 1");

    const std::size_t classes = test_probs.class_count();
    std::vector<double> priors(train_priors.values().begin(), train_priors.values().end());
    std::vector<double> ratio(classes);
    std::vector<double> adapted;
    std::size_t iterations = 0;
    bool converged = false;
    while (iterations < max_iter) {
        for (std::size_t i = 0; i < classes; ++i) ratio[i] = priors[i] / train_priors[i];
        std::vector<double> next = reweight_rows(test_probs, ratio, adapted);
        ++iterations;
        double change = 0.0;
        for (std::size_t i = 0; i < classes; ++i) change = std::max(change, std::abs(next[i] - priors[i]));
        priors = std::move(next);
        if (change < tol) {
            converged = true;
            break;
        }
    }
    // Final E-step so the returned posteriors correspond to the returned priors.
    priors = normalised(std::move(priors));
    for (std::size_t i = 0; i < classes; ++i) ratio[i] = priors[i] / train_priors[i];
    reweight_rows(test_probs, ratio, adapted);
    return LabelShiftResult{ProbabilityMatrix(test_probs.rows(), classes, std::move(adapted)),
                            PriorEstimate(std::move(priors)), iterations, converged};
}

}  // namespace abstain
