#include "abstain/calibration.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <string>

#include "abstain/error.hpp"

namespace abstain {

std::string_view calibrator_kind_name(CalibratorKind kind) {
    switch (kind) {
        case CalibratorKind::Platt: return "platt";
        case CalibratorKind::Temperature: return "temperature";
        case CalibratorKind::BiasCorrectedTemperature: return "bias_corrected_temperature";
    }
    return "unknown";
}

CalibratorKind parse_calibrator_kind(std::string_view name) {
    if (name == "platt") return CalibratorKind::Platt;
    if (name == "temperature") return CalibratorKind::Temperature;
    if (name == "bias_corrected_temperature" || name == "bcts") return CalibratorKind::BiasCorrectedTemperature;
    fail(ErrorCode::SchemaError, "unknown calibrator kind '" + std::string(name) + "'");
}

Calibrator Calibrator::identity_platt() { return Calibrator{CalibratorKind::Platt, 1.0, {0.0}}; }

Calibrator Calibrator::identity_temperature(std::size_t classes) {
    return Calibrator{CalibratorKind::Temperature, 1.0, std::vector<double>(classes, 0.0)};
}

namespace {

inline double log1p_exp(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// Multinomial logit whose class-i logit is theta . phi(x, i). All three
// calibrator kinds fit this form, differing only in the feature map:
//   Platt (two classes):  phi(x,0) = 0,       phi(x,1) = [s, 1]
//   Temperature:          phi(x,i) = [z_i]
//   Bias-corrected:       phi(x,i) = [z_i, e_i] with the class-0 bias pinned to 0
// The mean NLL is convex in theta and is minimised by damped Newton.
class LinearSoftmaxObjective {
public:
    LinearSoftmaxObjective(std::size_t rows, std::size_t classes, std::size_t params,
                           std::vector<double> features, std::span<const Label> labels)
        : rows_(rows), classes_(classes), params_(params), features_(std::move(features)), labels_(labels) {}

    std::size_t params() const { return params_; }

    double value(const Eigen::VectorXd& theta) const {
        double total = 0.0;
        std::vector<double> z(classes_);
        for (std::size_t x = 0; x < rows_; ++x) {
            logits(theta, x, z);
            total += log_sum_exp(z) - z[static_cast<std::size_t>(labels_[x])];
        }
        return total / static_cast<double>(rows_);
    }

    void gradient_hessian(const Eigen::VectorXd& theta, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) const {
        grad.setZero(static_cast<Eigen::Index>(params_));
        hess.setZero(static_cast<Eigen::Index>(params_), static_cast<Eigen::Index>(params_));
        std::vector<double> z(classes_);
        Eigen::VectorXd mean_phi(static_cast<Eigen::Index>(params_));
        for (std::size_t x = 0; x < rows_; ++x) {
            logits(theta, x, z);
            const double lse = log_sum_exp(z);
            mean_phi.setZero();
            for (std::size_t i = 0; i < classes_; ++i) {
                const double q = std::exp(z[i] - lse);
                const auto phi = feature(x, i);
                mean_phi += q * phi;
                hess.noalias() += q * phi * phi.transpose();
            }
            hess.noalias() -= mean_phi * mean_phi.transpose();
            grad += mean_phi - feature(x, static_cast<std::size_t>(labels_[x]));
        }
        const double inv = 1.0 / static_cast<double>(rows_);
        grad *= inv;
        hess *= inv;
    }

private:
    Eigen::Map<const Eigen::VectorXd> feature(std::size_t x, std::size_t i) const {
        return Eigen::Map<const Eigen::VectorXd>(features_.data() + (x * classes_ + i) * params_,
                                                 static_cast<Eigen::Index>(params_));
    }

    void logits(const Eigen::VectorXd& theta, std::size_t x, std::vector<double>& z) const {
        for (std::size_t i = 0; i < classes_; ++i) z[i] = theta.dot(feature(x, i));
    }

    static double log_sum_exp(const std::vector<double>& z) {
        const double m = *std::max_element(z.begin(), z.end());
        double s = 0.0;
        for (double v : z) s += std::exp(v - m);
        return m + std::log(s);
    }

    std::size_t rows_;
    std::size_t classes_;
    std::size_t params_;
    std::vector<double> features_;
    std::span<const Label> labels_;
};

// Damped Newton from theta0. When keep_first_positive is set, steps that
// would make theta[0] (the inverse temperature) nonpositive are shortened.
Eigen::VectorXd minimise(const LinearSoftmaxObjective& obj, Eigen::VectorXd theta, const FitOptions& opts,
                         bool keep_first_positive) {
    const auto p = static_cast<Eigen::Index>(obj.params());
    Eigen::VectorXd grad(p);
    Eigen::MatrixXd hess(p, p);
    double current = obj.value(theta);
    for (std::size_t iter = 0; iter < opts.max_iterations; ++iter) {
        obj.gradient_hessian(theta, grad, hess);
        if (grad.norm() < opts.gradient_tolerance) return theta;

        hess.diagonal().array() += 1e-12;
        Eigen::VectorXd step = -hess.ldlt().solve(grad);
        if (!step.allFinite() || step.dot(grad) >= 0.0) step = -grad;

        double t = 1.0;
        if (keep_first_positive && theta[0] + step[0] <= 0.0) t = 0.5 * theta[0] / -step[0];
        const double slope = grad.dot(step);
        bool moved = false;
        for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
            const Eigen::VectorXd candidate = theta + t * step;
            const double value = obj.value(candidate);
            if (std::isfinite(value) && value <= current + 1e-4 * t * slope + 1e-15 * std::abs(current)) {
                theta = candidate;
                current = value;
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    obj.gradient_hessian(theta, grad, hess);
    if (grad.norm() < opts.gradient_tolerance) return theta;
    fail(ErrorCode::DidNotConverge,
         "calibrator fit stopped with gradient norm " + std::to_string(grad.norm()) + " above tolerance");
}

void check_labels(std::span<const Label> labels, std::size_t classes) {
    for (Label y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= classes) {
            fail(ErrorCode::InvalidArgument, "calibration label out of range");
        }
    }
}

std::vector<std::size_t> class_counts(std::span<const Label> labels, std::size_t classes) {
    std::vector<std::size_t> counts(classes, 0);
    for (Label y : labels) ++counts[static_cast<std::size_t>(y)];
    return counts;
}

}  // namespace

Calibrator fit_platt(std::span<const double> scores, std::span<const Label> labels, const FitOptions& opts) {
    const std::size_t n = scores.size();
    if (labels.size() != n) fail(ErrorCode::DimensionMismatch, "scores and labels differ in length");
    if (n < 10) fail(ErrorCode::InvalidArgument, "calibration needs at least 10 examples");
    check_labels(labels, 2);
    const auto counts = class_counts(labels, 2);
    if (counts[0] == 0 || counts[1] == 0) fail(ErrorCode::DegenerateLabels, "Platt scaling needs both classes");

    std::vector<double> features(n * 2 * 2, 0.0);
    for (std::size_t x = 0; x < n; ++x) {
        features[(x * 2 + 1) * 2 + 0] = scores[x];
        features[(x * 2 + 1) * 2 + 1] = 1.0;
    }
    const LinearSoftmaxObjective obj(n, 2, 2, std::move(features), labels);
    Eigen::VectorXd theta(2);
    theta << 1.0, 0.0;
    theta = minimise(obj, theta, opts, false);
    return Calibrator{CalibratorKind::Platt, theta[0], {theta[1]}};
}

Calibrator fit_temperature(const LogitMatrix& logits, std::span<const Label> labels, CalibratorKind kind,
                           const FitOptions& opts) {
    if (kind == CalibratorKind::Platt) fail(ErrorCode::InvalidArgument, "use fit_platt for Platt scaling");
    const std::size_t n = logits.rows;
    const std::size_t classes = logits.classes;
    if (logits.values.size() != n * classes || classes < 2) {
        fail(ErrorCode::DimensionMismatch, "logit matrix must be N x C with C >= 2");
    }
    if (labels.size() != n) fail(ErrorCode::DimensionMismatch, "logits and labels differ in length");
    if (n < 10) fail(ErrorCode::InvalidArgument, "calibration needs at least 10 examples");
    check_labels(labels, classes);
    const auto counts = class_counts(labels, classes);
    const auto present = static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }));
    if (present < 2) fail(ErrorCode::DegenerateLabels, "calibration labels contain a single class");
    const bool biased = kind == CalibratorKind::BiasCorrectedTemperature;
    if (biased && present < classes) {
        fail(ErrorCode::DegenerateLabels, "bias-corrected temperature scaling needs every class present");
    }

    const std::size_t params = biased ? classes : 1;
    std::vector<double> features(n * classes * params, 0.0);
    for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t i = 0; i < classes; ++i) {
            double* phi = features.data() + (x * classes + i) * params;
            phi[0] = logits.values[x * classes + i];
            if (biased && i > 0) phi[i] = 1.0;
        }
    }
    const LinearSoftmaxObjective obj(n, classes, params, std::move(features), labels);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params));
    theta[0] = 1.0;
    theta = minimise(obj, theta, opts, true);

    Calibrator cal{kind, theta[0], std::vector<double>(classes, 0.0)};
    if (biased) {
        for (std::size_t i = 1; i < classes; ++i) cal.offset[i] = theta[static_cast<Eigen::Index>(i)] / theta[0];
    }
    return cal;
}

std::vector<double> apply_calibrator(const Calibrator& cal, std::span<const double> scores) {
    if (cal.kind != CalibratorKind::Platt || cal.offset.size() != 1) {
        fail(ErrorCode::DimensionMismatch, "scalar scores need a Platt calibrator with one offset");
    }
    std::vector<double> out(scores.size());
    for (std::size_t x = 0; x < scores.size(); ++x) out[x] = sigmoid(cal.scale * scores[x] + cal.offset[0]);
    return out;
}

ProbabilityMatrix apply_calibrator(const Calibrator& cal, const LogitMatrix& logits) {
    if (cal.kind == CalibratorKind::Platt) {
        fail(ErrorCode::DimensionMismatch, "logit matrices need a temperature calibrator");
    }
    if (cal.offset.size() != logits.classes || logits.values.size() != logits.rows * logits.classes) {
        fail(ErrorCode::DimensionMismatch, "calibrator class count differs from the logit matrix");
    }
    if (!(cal.scale > 0.0)) fail(ErrorCode::InvalidArgument, "temperature calibrators need scale > 0");
    std::vector<double> out(logits.values.size());
    std::vector<double> z(logits.classes);
    for (std::size_t x = 0; x < logits.rows; ++x) {
        const auto row = logits.row(x);
        for (std::size_t i = 0; i < logits.classes; ++i) z[i] = cal.scale * (row[i] + cal.offset[i]);
        const double m = *std::max_element(z.begin(), z.end());
        double s = 0.0;
        for (double& v : z) {
            v = std::exp(v - m);
            s += v;
        }
        for (std::size_t i = 0; i < logits.classes; ++i) out[x * logits.classes + i] = z[i] / s;
    }
    return ProbabilityMatrix(logits.rows, logits.classes, std::move(out));
}

double calibration_nll(const Calibrator& cal, std::span<const double> scores, std::span<const Label> labels) {
    if (cal.kind != CalibratorKind::Platt || cal.offset.size() != 1) {
        fail(ErrorCode::DimensionMismatch, "scalar scores need a Platt calibrator with one offset");
    }
    if (labels.size() != scores.size()) fail(ErrorCode::DimensionMismatch, "scores and labels differ in length");
    double total = 0.0;
    for (std::size_t x = 0; x < scores.size(); ++x) {
        const double z = cal.scale * scores[x] + cal.offset[0];
        total += log1p_exp(z) - (labels[x] == 1 ? z : 0.0);
    }
    return total / static_cast<double>(scores.size());
}

double calibration_nll(const Calibrator& cal, const LogitMatrix& logits, std::span<const Label> labels) {
    if (labels.size() != logits.rows) fail(ErrorCode::DimensionMismatch, "logits and labels differ in length");
    if (cal.offset.size() != logits.classes) fail(ErrorCode::DimensionMismatch, "calibrator class count mismatch");
    double total = 0.0;
    std::vector<double> z(logits.classes);
    for (std::size_t x = 0; x < logits.rows; ++x) {
        const auto row = logits.row(x);
        for (std::size_t i = 0; i < logits.classes; ++i) z[i] = cal.scale * (row[i] + cal.offset[i]);
        const double m = *std::max_element(z.begin(), z.end());
        double s = 0.0;
        for (double v : z) s += std::exp(v - m);
        total += m + std::log(s) - z[static_cast<std::size_t>(labels[x])];
    }
    return total / static_cast<double>(logits.rows);
}

nlohmann::json calibrator_to_json(const Calibrator& cal) {
    return nlohmann::json{{"kind", std::string(calibrator_kind_name(cal.kind))},
                          {"scale", cal.scale},
                          {"offset", cal.offset}};
}

Calibrator calibrator_from_json(const nlohmann::json& j) {
    try {
        Calibrator cal;
        cal.kind = parse_calibrator_kind(j.at("kind").get<std::string>());
        cal.scale = j.at("scale").get<double>();
        cal.offset = j.at("offset").get<std::vector<double>>();
        if (cal.kind == CalibratorKind::Platt && cal.offset.size() != 1) {
            fail(ErrorCode::SchemaError, "Platt calibrator must have exactly one offset");
        }
        if (cal.kind != CalibratorKind::Platt && !(cal.scale > 0.0)) {
            fail(ErrorCode::SchemaError, "temperature calibrator must have scale > 0");
        }
        return cal;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::SchemaError, std::string("malformed calibrator JSON: ") + e.what());
    }
}

}  // namespace abstain
