#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace abstain {

enum class ErrorCode {
    InvalidArgument,
    NoPositives,
    NoNegatives,
    InvalidSpecificity,
    DegenerateDenominator,
    DegenerateExpectedCounts,
    DidNotConverge,
    DegenerateLabels,
    DimensionMismatch,
    NonpositiveTrainPrior,
    BudgetTooLarge,
    BudgetMismatch,
    WindowTooLarge,
    EvenWindow,
    MissingPriors,
    MissingVariance,
    EmptyFeasibleSet,
    InvalidConfig,
    EmptyClass,
    ZeroVariance,
    TooFewPairs,
    InputNotFound,
    SchemaError,
};

std::string_view error_code_name(ErrorCode code) noexcept;

// All library failures are reported through this type. what() carries a
// human-readable message; code() is stable and used by the CLI for its
// machine-parseable error line.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    std::string_view name() const noexcept { return error_code_name(code_); }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace abstain
