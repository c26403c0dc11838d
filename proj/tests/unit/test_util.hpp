#pragma once

#include <optional>

#include "abstain/error.hpp"

// Code of the abstain::Error thrown by f, or nullopt when nothing is thrown.
template <typename F>
std::optional<abstain::ErrorCode> error_code_of(F&& f) {
    try {
        f();
    } catch (const abstain::Error& e) {
        return e.code();
    }
    return std::nullopt;
}

#define CHECK_ERROR(expr, code_) CHECK(error_code_of([&] { (void)(expr); }) == std::optional(abstain::ErrorCode::code_))
