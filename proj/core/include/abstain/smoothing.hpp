#pragma once

#include <span>
#include <vector>

namespace abstain {

// Savitzky-Golay smoothing: each output is the value at the window centre of a
// least-squares polynomial of degree `polyorder` fit to the centred window.
// Near the ends the window shrinks symmetrically to the largest centred window
// that fits (half-width min(window/2, i, n-1-i)), so no padding values are
// invented. A shrunken window with fewer points than polyorder+1 interpolates.
std::vector<double> smooth_savitzky_golay(std::span<const double> values, int window, int polyorder);

// Centre-point SG coefficients for a symmetric window of half-width `half`.
std::vector<double> savitzky_golay_coefficients(int half, int polyorder);

}  // namespace abstain
