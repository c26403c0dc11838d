#include "abstain/error.hpp"

namespace abstain {

std::string_view error_code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::NoPositives: return "NoPositives";
        case ErrorCode::NoNegatives: return "NoNegatives";
        case ErrorCode::InvalidSpecificity: return "InvalidSpecificity";
        case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
        case ErrorCode::DegenerateExpectedCounts: return "DegenerateExpectedCounts";
        case ErrorCode::DidNotConverge: return "DidNotConverge";
        case ErrorCode::DegenerateLabels: return "DegenerateLabels";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NonpositiveTrainPrior: return "NonpositiveTrainPrior";
        case ErrorCode::BudgetTooLarge: return "BudgetTooLarge";
        case ErrorCode::BudgetMismatch: return "BudgetMismatch";
        case ErrorCode::WindowTooLarge: return "WindowTooLarge";
        case ErrorCode::EvenWindow: return "EvenWindow";
        case ErrorCode::MissingPriors: return "MissingPriors";
        case ErrorCode::MissingVariance: return "MissingVariance";
        case ErrorCode::EmptyFeasibleSet: return "EmptyFeasibleSet";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::EmptyClass: return "EmptyClass";
        case ErrorCode::ZeroVariance: return "ZeroVariance";
        case ErrorCode::TooFewPairs: return "TooFewPairs";
        case ErrorCode::InputNotFound: return "InputNotFound";
        case ErrorCode::SchemaError: return "SchemaError";
    }
    return "Unknown";
}

}  // namespace abstain
