#include <doctest.h>

#include "abstain/types.hpp"
#include "test_util.hpp"

using namespace abstain;

TEST_CASE("sorted prediction set validates ordering, range and labels") {
    CHECK_NOTHROW(SortedPredictionSet({0.1, 0.1, 0.5}, LabelVector{0, 1, 1}));
    CHECK_ERROR(SortedPredictionSet({0.2, 0.1}), InvalidArgument);
    CHECK_ERROR(SortedPredictionSet({-0.1, 0.1}), InvalidArgument);
    CHECK_ERROR(SortedPredictionSet({0.1, 1.1}), InvalidArgument);
    CHECK_ERROR(SortedPredictionSet({0.1, 0.2}, LabelVector{0}), DimensionMismatch);
    CHECK_ERROR(SortedPredictionSet({0.1, 0.2}, LabelVector{0, 2}), InvalidArgument);

    SortedPredictionSet unlabeled({0.3});
    CHECK_FALSE(unlabeled.has_labels());
    CHECK_ERROR(unlabeled.labels(), InvalidArgument);
}

TEST_CASE("from_unsorted is a stable sort that records the permutation") {
    std::vector<double> p = {0.7, 0.2, 0.7, 0.1};
    LabelVector y = {1, 0, 0, 1};
    auto s = SortedPredictionSet::from_unsorted(p, std::span<const Label>(y));
    CHECK(std::vector<double>(s.probs().begin(), s.probs().end()) == std::vector<double>{0.1, 0.2, 0.7, 0.7});
    CHECK(std::vector<std::size_t>(s.order().begin(), s.order().end()) == std::vector<std::size_t>{3, 1, 0, 2});
    CHECK(std::vector<Label>(s.labels().begin(), s.labels().end()) == LabelVector{1, 0, 1, 0});
}

TEST_CASE("probability matrix rows must lie on the simplex") {
    CHECK_NOTHROW(ProbabilityMatrix(2, 2, {0.3, 0.7, 1.0, 0.0}));
    CHECK_ERROR(ProbabilityMatrix(1, 2, {0.3, 0.6}), InvalidArgument);
    CHECK_ERROR(ProbabilityMatrix(1, 2, {1.2, -0.2}), InvalidArgument);
    CHECK_ERROR(ProbabilityMatrix(2, 2, {0.5, 0.5}), DimensionMismatch);

    ProbabilityMatrix P(3, 3, {0.2, 0.4, 0.4, 0.5, 0.25, 0.25, 0.1, 0.1, 0.8});
    CHECK(P.argmax() == LabelVector{1, 0, 2});  // first maximum wins on ties
    CHECK(P.column(2) == std::vector<double>{0.4, 0.25, 0.8});
    auto sub = P.select_rows(std::vector<std::size_t>{2, 0});
    CHECK(sub.rows() == 2);
    CHECK(sub(0, 2) == 0.8);
    CHECK(sub(1, 1) == 0.4);

    auto B = ProbabilityMatrix::from_binary(std::vector<double>{0.25, 1.0});
    CHECK(B(0, 0) == 0.75);
    CHECK(B(1, 1) == 1.0);
}

TEST_CASE("penalty weights") {
    auto Q = PenaltyWeightMatrix::quadratic(4);
    CHECK(Q(0, 3) == 9.0);
    CHECK(Q(2, 1) == 1.0);
    CHECK(Q(2, 2) == 0.0);
    auto Z = PenaltyWeightMatrix::zero_one(3);
    CHECK(Z(0, 1) == 1.0);
    CHECK(Z(1, 1) == 0.0);
    CHECK_ERROR(PenaltyWeightMatrix(2, {0, 1, 1}), DimensionMismatch);
    CHECK_ERROR(PenaltyWeightMatrix(2, {0, -1, 1, 0}), InvalidArgument);
}

TEST_CASE("prior estimates") {
    CHECK_ERROR(PriorEstimate({0.5, 0.6}), InvalidArgument);
    CHECK_ERROR(PriorEstimate({1.2, -0.2}), InvalidArgument);
    auto e = PriorEstimate::empirical(LabelVector{0, 1, 1, 2}, 4);
    CHECK(e[0] == 0.25);
    CHECK(e[1] == 0.5);
    CHECK(e[3] == 0.0);
    CHECK(PriorEstimate::uniform(4)[2] == 0.25);
}
