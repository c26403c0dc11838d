#include "abstain/smoothing.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <map>

#include "abstain/error.hpp"

namespace abstain {

std::vector<double> savitzky_golay_coefficients(int half, int polyorder) {
    const int width = 2 * half + 1;
    const int degree = std::min(polyorder, width - 1);
    Eigen::MatrixXd design(width, degree + 1);
    for (int r = 0; r < width; ++r) {
        const double offset = static_cast<double>(r - half);
        double power = 1.0;
        for (int c = 0; c <= degree; ++c) {
            design(r, c) = power;
            power *= offset;
        }
    }
    // Row 0 of the pseudo-inverse maps the window onto the fitted intercept,
    // i.e. the polynomial evaluated at the centre.
    const Eigen::MatrixXd gram = design.transpose() * design;
    const Eigen::MatrixXd pinv = gram.ldlt().solve(design.transpose());
    std::vector<double> coeffs(static_cast<std::size_t>(width));
    for (int r = 0; r < width; ++r) coeffs[static_cast<std::size_t>(r)] = pinv(0, r);
    return coeffs;
}

std::vector<double> smooth_savitzky_golay(std::span<const double> values, int window, int polyorder) {
    if (window <= 0 || window % 2 == 0) fail(ErrorCode::EvenWindow, "Savitzky-Golay window must be odd and positive");
    if (polyorder < 0 || polyorder >= window) {
        fail(ErrorCode::InvalidArgument, "Savitzky-Golay polyorder must satisfy 0 <= polyorder < window");
    }
    if (values.size() < static_cast<std::size_t>(window)) {
        fail(ErrorCode::WindowTooLarge, "Savitzky-Golay window longer than the input");
    }

    const int n = static_cast<int>(values.size());
    const int half = window / 2;
    std::map<int, std::vector<double>> cache;
    std::vector<double> out(values.size());
    for (int i = 0; i < n; ++i) {
        const int h = std::min({half, i, n - 1 - i});
        auto it = cache.find(h);
        if (it == cache.end()) it = cache.emplace(h, savitzky_golay_coefficients(h, polyorder)).first;
        const auto& coeffs = it->second;
        double acc = 0.0;
        for (int k = -h; k <= h; ++k) acc += coeffs[static_cast<std::size_t>(k + h)] * values[static_cast<std::size_t>(i + k)];
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

}  // namespace abstain
