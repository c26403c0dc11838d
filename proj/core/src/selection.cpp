#include "abstain/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "abstain/error.hpp"

namespace abstain {

std::size_t budget_count(double fraction, std::size_t n) {
    if (!(fraction >= 0.0 && fraction < 1.0)) fail(ErrorCode::InvalidArgument, "budget fraction must lie in [0, 1)");
    // The small slack keeps e.g. 0.3 * 10000 from flooring to 2999.
    return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

AbstentionBudget AbstentionBudget::from_fraction(double fraction, std::size_t n, SelectionMode mode) {
    return AbstentionBudget{budget_count(fraction, n), mode};
}

std::vector<std::size_t> select_abstentions(const WindowScoreVector& scores, const AbstentionBudget& budget) {
    if (budget.mode != SelectionMode::Window) fail(ErrorCode::BudgetMismatch, "window scores need a window budget");
    if (budget.count != scores.window) {
        fail(ErrorCode::BudgetMismatch, "budget count " + std::to_string(budget.count) +
                                            " differs from the scored window size " + std::to_string(scores.window));
    }
    if (scores.scores.empty()) fail(ErrorCode::BudgetMismatch, "empty window score vector");
    const auto best = static_cast<std::size_t>(
        std::max_element(scores.scores.begin(), scores.scores.end()) - scores.scores.begin());
    std::vector<std::size_t> out(budget.count);
    std::iota(out.begin(), out.end(), best);
    return out;
}

std::vector<std::size_t> select_top_k(std::span<const double> priority, std::size_t count) {
    if (count > priority.size()) fail(ErrorCode::BudgetMismatch, "budget exceeds the number of scored examples");
    std::vector<std::size_t> idx(priority.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return priority[a] > priority[b]; });
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::vector<std::size_t> select_abstentions(const MarginalScoreVector& scores, const AbstentionBudget& budget) {
    if (budget.mode != SelectionMode::TopK) fail(ErrorCode::BudgetMismatch, "marginal scores need a top-k budget");
    return select_top_k(scores.scores, budget.count);
}

}  // namespace abstain
