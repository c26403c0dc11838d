#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "abstain/scorers.hpp"

namespace abstain {

enum class SelectionMode { Window, TopK };

// Abstain on at most `count` examples. From a fraction k of N examples the
// count is floor(k * N).
struct AbstentionBudget {
    std::size_t count = 0;
    SelectionMode mode = SelectionMode::Window;

    static AbstentionBudget from_fraction(double fraction, std::size_t n, SelectionMode mode);
};

std::size_t budget_count(double fraction, std::size_t n);

// Window mode: [i*, i* + d) for i* = argmax scores, smallest i* on ties.
// Indices refer to positions in the sorted prediction set.
std::vector<std::size_t> select_abstentions(const WindowScoreVector& scores, const AbstentionBudget& budget);

// Top-k mode: the d highest scores, lower index first on ties; returned ascending.
std::vector<std::size_t> select_abstentions(const MarginalScoreVector& scores, const AbstentionBudget& budget);

// Top-k over an arbitrary priority vector (baselines: higher = abstain first).
std::vector<std::size_t> select_top_k(std::span<const double> priority, std::size_t count);

}  // namespace abstain
