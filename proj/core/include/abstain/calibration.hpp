#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "abstain/types.hpp"

namespace abstain {

enum class CalibratorKind { Platt, Temperature, BiasCorrectedTemperature };

std::string_view calibrator_kind_name(CalibratorKind kind);
CalibratorKind parse_calibrator_kind(std::string_view name);

// Platt:       p = sigmoid(scale * s + offset[0]) for a scalar score s.
// Temperature: p = softmax(scale * (z + offset)) over logits z, scale = 1/T.
//              Plain temperature keeps offset at zero; the bias-corrected kind
//              fits one additive bias per class jointly with the temperature.
struct Calibrator {
    CalibratorKind kind = CalibratorKind::Temperature;
    double scale = 1.0;
    std::vector<double> offset;

    double temperature() const { return 1.0 / scale; }

    static Calibrator identity_platt();
    static Calibrator identity_temperature(std::size_t classes);
};

// Dense N x C logit matrix, row-major.
struct LogitMatrix {
    std::size_t rows = 0;
    std::size_t classes = 0;
    std::vector<double> values;

    std::span<const double> row(std::size_t r) const { return {values.data() + r * classes, classes}; }
};

struct FitOptions {
    std::size_t max_iterations = 100;
    double gradient_tolerance = 1e-8;  // on the mean-NLL gradient norm
};

// Minimise the NLL of labels under the calibrated probabilities, starting from
// the identity calibrator (scale 1, offset 0). Deterministic for given input.
Calibrator fit_platt(std::span<const double> scores, std::span<const Label> labels, const FitOptions& opts = {});
Calibrator fit_temperature(const LogitMatrix& logits, std::span<const Label> labels, CalibratorKind kind,
                           const FitOptions& opts = {});

std::vector<double> apply_calibrator(const Calibrator& cal, std::span<const double> scores);
ProbabilityMatrix apply_calibrator(const Calibrator& cal, const LogitMatrix& logits);

// Mean negative log-likelihood of labels under a calibrator.
double calibration_nll(const Calibrator& cal, std::span<const double> scores, std::span<const Label> labels);
double calibration_nll(const Calibrator& cal, const LogitMatrix& logits, std::span<const Label> labels);

// Flat JSON object {"kind": ..., "scale": ..., "offset": [...]}.
nlohmann::json calibrator_to_json(const Calibrator& cal);
Calibrator calibrator_from_json(const nlohmann::json& j);

}  // namespace abstain
