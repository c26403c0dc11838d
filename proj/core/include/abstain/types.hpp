#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace abstain {

using Label = int;
using LabelVector = std::vector<Label>;

// Binary-case calibrated probabilities sorted ascending, with optional labels.
// Window scorers index into this ordering, so construction refuses unsorted
// input; use from_unsorted() to sort and keep the permutation.
class SortedPredictionSet {
public:
    SortedPredictionSet() = default;
    explicit SortedPredictionSet(std::vector<double> probs,
                                 std::optional<LabelVector> labels = std::nullopt);

    // Stable ascending sort. order()[k] is the original index of sorted entry k.
    static SortedPredictionSet from_unsorted(std::span<const double> probs,
                                             std::optional<std::span<const Label>> labels = std::nullopt);

    std::size_t size() const noexcept { return probs_.size(); }
    std::span<const double> probs() const noexcept { return probs_; }
    bool has_labels() const noexcept { return labels_.has_value(); }
    std::span<const Label> labels() const;
    std::span<const std::size_t> order() const noexcept { return order_; }

private:
    std::vector<double> probs_;
    std::optional<LabelVector> labels_;
    std::vector<std::size_t> order_;
};

// N x C row-major matrix of class probabilities; rows lie on the simplex.
class ProbabilityMatrix {
public:
    static constexpr double kRowSumTolerance = 1e-9;

    ProbabilityMatrix() = default;
    ProbabilityMatrix(std::size_t rows, std::size_t classes, std::vector<double> entries);

    // Two-column matrix [1 - p, p] from positive-class probabilities.
    static ProbabilityMatrix from_binary(std::span<const double> positive_probs);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t class_count() const noexcept { return classes_; }
    double operator()(std::size_t row, std::size_t cls) const noexcept {
        return entries_[row * classes_ + cls];
    }
    std::span<const double> row(std::size_t r) const noexcept {
        return {entries_.data() + r * classes_, classes_};
    }
    std::span<const double> entries() const noexcept { return entries_; }

    // Column of class probabilities, e.g. positive_column = column(1) for binary.
    std::vector<double> column(std::size_t cls) const;
    // First index of the maximal entry per row.
    LabelVector argmax() const;
    ProbabilityMatrix select_rows(std::span<const std::size_t> indices) const;

private:
    std::size_t rows_ = 0;
    std::size_t classes_ = 0;
    std::vector<double> entries_;
};

// C x C nonnegative penalty matrix; weight(i, j) penalizes predicting a true
// class-i example as class j.
class PenaltyWeightMatrix {
public:
    PenaltyWeightMatrix() = default;
    PenaltyWeightMatrix(std::size_t classes, std::vector<double> weights);

    static PenaltyWeightMatrix quadratic(std::size_t classes);
    static PenaltyWeightMatrix zero_one(std::size_t classes);

    std::size_t dimension() const noexcept { return classes_; }
    double operator()(std::size_t true_cls, std::size_t pred_cls) const noexcept {
        return weights_[true_cls * classes_ + pred_cls];
    }
    std::span<const double> weights() const noexcept { return weights_; }

private:
    std::size_t classes_ = 0;
    std::vector<double> weights_;
};

// Per-class prior probabilities (training priors or EM-estimated test priors).
class PriorEstimate {
public:
    static constexpr double kSumTolerance = 1e-9;

    PriorEstimate() = default;
    explicit PriorEstimate(std::vector<double> priors);

    static PriorEstimate uniform(std::size_t classes);
    static PriorEstimate empirical(std::span<const Label> labels, std::size_t classes);

    std::size_t size() const noexcept { return priors_.size(); }
    double operator[](std::size_t i) const noexcept { return priors_[i]; }
    std::span<const double> values() const noexcept { return priors_; }

private:
    std::vector<double> priors_;
};

}  // namespace abstain
