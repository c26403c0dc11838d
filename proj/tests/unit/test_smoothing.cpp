#include <doctest.h>

#include <cmath>

#include "abstain/rng.hpp"
#include "abstain/smoothing.hpp"
#include "test_util.hpp"

using namespace abstain;

namespace {

// Least-squares line through (k, v[k]) for k in [c-h, c+h], evaluated at c.
double line_fit_at_centre(const std::vector<double>& v, std::size_t c, std::size_t h) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
    for (std::size_t k = c - h; k <= c + h; ++k) {
        const double x = static_cast<double>(k);
        sx += x;
        sy += v[k];
        sxx += x * x;
        sxy += x * v[k];
        n += 1;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double icept = (sy - slope * sx) / n;
    return icept + slope * static_cast<double>(c);
}

}  // namespace

TEST_CASE("order-1 window-11 interior equals the centred moving average") {
    Rng rng(1);
    std::vector<double> v(40);
    for (auto& x : v) x = rng.normal();
    auto s = smooth_savitzky_golay(v, 11, 1);
    REQUIRE(s.size() == v.size());
    for (std::size_t i = 5; i + 5 < v.size(); ++i) {
        double m = 0.0;
        for (std::size_t k = i - 5; k <= i + 5; ++k) m += v[k];
        CHECK(s[i] == doctest::Approx(m / 11.0).epsilon(1e-12));
    }
}

TEST_CASE("polynomial inputs are reproduced") {
    std::vector<double> lin(30), quad(30);
    for (std::size_t i = 0; i < 30; ++i) {
        lin[i] = 2.5 * static_cast<double>(i) - 7.0;
        quad[i] = 0.3 * static_cast<double>(i * i) - static_cast<double>(i) + 1.0;
    }
    for (int w : {3, 5, 11, 21}) {
        for (int order = 1; order < std::min(w, 4); ++order) {
            auto s = smooth_savitzky_golay(lin, w, order);
            for (std::size_t i = 0; i < 30; ++i) CHECK(s[i] == doctest::Approx(lin[i]).epsilon(1e-10));
        }
        auto q = smooth_savitzky_golay(quad, w, 2);
        for (std::size_t i = 0; i < 30; ++i) CHECK(q[i] == doctest::Approx(quad[i]).epsilon(1e-10));
    }
}

TEST_CASE("random length-50 input matches per-window line fits, including shrunken edges") {
    Rng rng(2);
    std::vector<double> v(50);
    for (auto& x : v) x = rng.uniform(-3.0, 3.0);
    auto s = smooth_savitzky_golay(v, 11, 1);
    for (std::size_t i = 0; i < 50; ++i) {
        const std::size_t h = std::min<std::size_t>({5, i, 49 - i});
        const double expect = h == 0 ? v[i] : line_fit_at_centre(v, i, h);
        CHECK(std::abs(s[i] - expect) <= 1e-10);
    }
}

TEST_CASE("argument errors") {
    std::vector<double> v(10, 1.0);
    CHECK_ERROR(smooth_savitzky_golay(v, 4, 1), EvenWindow);
    CHECK_ERROR(smooth_savitzky_golay(v, 0, 0), EvenWindow);
    CHECK_ERROR(smooth_savitzky_golay(v, 11, 1), WindowTooLarge);
    CHECK_ERROR(smooth_savitzky_golay(v, 5, 5), InvalidArgument);
}

TEST_CASE("coefficients sum to one") {
    for (int h : {1, 3, 5, 8}) {
        for (int order = 0; order <= std::min(2 * h, 3); ++order) {
            auto c = savitzky_golay_coefficients(h, order);
            double sum = 0.0;
            for (double x : c) sum += x;
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}
