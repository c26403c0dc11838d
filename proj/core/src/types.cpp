#include "abstain/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "abstain/error.hpp"

namespace abstain {

namespace {

void check_probability(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) {
        fail(ErrorCode::InvalidArgument, std::string(what) + " outside [0,1]: " + std::to_string(p));
    }
}

}  // namespace

SortedPredictionSet::SortedPredictionSet(std::vector<double> probs, std::optional<LabelVector> labels)
    : probs_(std::move(probs)), labels_(std::move(labels)) {
    for (std::size_t i = 0; i < probs_.size(); ++i) {
        check_probability(probs_[i], "probability");
        if (i > 0 && probs_[i - 1] > probs_[i]) {
            fail(ErrorCode::InvalidArgument, "probabilities are not sorted ascending at index " + std::to_string(i));
        }
    }
    if (labels_) {
        if (labels_->size() != probs_.size()) {
            fail(ErrorCode::DimensionMismatch, "labels length differs from probabilities length");
        }
        for (Label y : *labels_) {
            if (y != 0 && y != 1) fail(ErrorCode::InvalidArgument, "binary labels must be 0 or 1");
        }
    }
    order_.resize(probs_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
}

SortedPredictionSet SortedPredictionSet::from_unsorted(std::span<const double> probs,
                                                       std::optional<std::span<const Label>> labels) {
    if (labels && labels->size() != probs.size()) {
        fail(ErrorCode::DimensionMismatch, "labels length differs from probabilities length");
    }
    std::vector<std::size_t> order(probs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return probs[a] < probs[b]; });

    std::vector<double> sorted(probs.size());
    for (std::size_t k = 0; k < order.size(); ++k) sorted[k] = probs[order[k]];

    std::optional<LabelVector> sorted_labels;
    if (labels) {
        sorted_labels.emplace(probs.size());
        for (std::size_t k = 0; k < order.size(); ++k) (*sorted_labels)[k] = (*labels)[order[k]];
    }
    SortedPredictionSet out(std::move(sorted), std::move(sorted_labels));
    out.order_ = std::move(order);
    return out;
}

std::span<const Label> SortedPredictionSet::labels() const {
    if (!labels_) fail(ErrorCode::InvalidArgument, "prediction set has no labels");
    return *labels_;
}

ProbabilityMatrix::ProbabilityMatrix(std::size_t rows, std::size_t classes, std::vector<double> entries)
    : rows_(rows), classes_(classes), entries_(std::move(entries)) {
    if (classes_ == 0) fail(ErrorCode::InvalidArgument, "class_count must be positive");
    if (entries_.size() != rows_ * classes_) {
        fail(ErrorCode::DimensionMismatch, "probability matrix entry count does not match rows*classes");
    }
    for (std::size_t r = 0; r < rows_; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < classes_; ++c) {
            const double p = entries_[r * classes_ + c];
            check_probability(p, "probability matrix entry");
            sum += p;
        }
        if (std::abs(sum - 1.0) > kRowSumTolerance) {
            fail(ErrorCode::InvalidArgument, "probability matrix row " + std::to_string(r) +
                                                 " does not sum to 1 (sum=" + std::to_string(sum) + ")");
        }
    }
}

ProbabilityMatrix ProbabilityMatrix::from_binary(std::span<const double> positive_probs) {
    std::vector<double> entries(positive_probs.size() * 2);
    for (std::size_t i = 0; i < positive_probs.size(); ++i) {
        check_probability(positive_probs[i], "probability");
        entries[2 * i] = 1.0 - positive_probs[i];
        entries[2 * i + 1] = positive_probs[i];
    }
    return ProbabilityMatrix(positive_probs.size(), 2, std::move(entries));
}

std::vector<double> ProbabilityMatrix::column(std::size_t cls) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, cls);
    return out;
}

LabelVector ProbabilityMatrix::argmax() const {
    LabelVector out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        auto row_span = row(r);
        out[r] = static_cast<Label>(std::max_element(row_span.begin(), row_span.end()) - row_span.begin());
    }
    return out;
}

ProbabilityMatrix ProbabilityMatrix::select_rows(std::span<const std::size_t> indices) const {
    std::vector<double> entries;
    entries.reserve(indices.size() * classes_);
    for (std::size_t idx : indices) {
        auto r = row(idx);
        entries.insert(entries.end(), r.begin(), r.end());
    }
    ProbabilityMatrix out;
    out.rows_ = indices.size();
    out.classes_ = classes_;
    out.entries_ = std::move(entries);
    return out;
}

PenaltyWeightMatrix::PenaltyWeightMatrix(std::size_t classes, std::vector<double> weights)
    : classes_(classes), weights_(std::move(weights)) {
    if (classes_ == 0) fail(ErrorCode::InvalidArgument, "penalty matrix dimension must be positive");
    if (weights_.size() != classes_ * classes_) {
        fail(ErrorCode::DimensionMismatch, "penalty matrix must be square");
    }
    for (double w : weights_) {
        if (!(w >= 0.0) || !std::isfinite(w)) fail(ErrorCode::InvalidArgument, "penalty weights must be finite and >= 0");
    }
}

PenaltyWeightMatrix PenaltyWeightMatrix::quadratic(std::size_t classes) {
    std::vector<double> w(classes * classes);
    for (std::size_t i = 0; i < classes; ++i) {
        for (std::size_t j = 0; j < classes; ++j) {
            const double diff = static_cast<double>(i) - static_cast<double>(j);
            w[i * classes + j] = diff * diff;
        }
    }
    return PenaltyWeightMatrix(classes, std::move(w));
}

PenaltyWeightMatrix PenaltyWeightMatrix::zero_one(std::size_t classes) {
    std::vector<double> w(classes * classes, 1.0);
    for (std::size_t i = 0; i < classes; ++i) w[i * classes + i] = 0.0;
    return PenaltyWeightMatrix(classes, std::move(w));
}

PriorEstimate::PriorEstimate(std::vector<double> priors) : priors_(std::move(priors)) {
    if (priors_.empty()) fail(ErrorCode::InvalidArgument, "priors must be non-empty");
    double sum = 0.0;
    for (double p : priors_) {
        if (!(p >= 0.0)) fail(ErrorCode::InvalidArgument, "priors must be nonnegative");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kSumTolerance) {
        fail(ErrorCode::InvalidArgument, "priors must sum to 1 (sum=" + std::to_string(sum) + ")");
    }
}

PriorEstimate PriorEstimate::uniform(std::size_t classes) {
    return PriorEstimate(std::vector<double>(classes, 1.0 / static_cast<double>(classes)));
}

PriorEstimate PriorEstimate::empirical(std::span<const Label> labels, std::size_t classes) {
    if (labels.empty()) fail(ErrorCode::InvalidArgument, "empirical priors need at least one label");
    std::vector<double> counts(classes, 0.0);
    for (Label y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= classes) fail(ErrorCode::InvalidArgument, "label out of range");
        counts[static_cast<std::size_t>(y)] += 1.0;
    }
    for (double& c : counts) c /= static_cast<double>(labels.size());
    return PriorEstimate(std::move(counts));
}

}  // namespace abstain
