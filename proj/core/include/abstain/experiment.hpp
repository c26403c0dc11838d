#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "abstain/calibration.hpp"
#include "abstain/evaluation.hpp"
#include "abstain/scorers.hpp"
#include "abstain/simulation.hpp"

namespace abstain {

enum class TaskKind { Figure1, AurocCorrelation, KappaConvergence, LabelShift, Custom };

enum class MethodKind {
    EstSensAtSpec,  // window scorer for sensitivity at a target specificity
    EstAuroc,       // window scorer for auROC (deterministic or Monte-Carlo)
    EstKappa,       // marginal scorer for weighted kappa
    JsDivergence,
    MaxClassProb,
    Entropy,
    ExternalVariance,
    Fumera,
};

struct MethodSpec {
    std::string name;
    MethodKind kind = MethodKind::EstAuroc;
    ScorerMode mode = ScorerMode::Deterministic;
    double target_specificity = 0.9;
    bool adapt = false;  // EM label-shift adaptation before scoring

    // Pairing key for comparisons: name, suffixed with "+adapted" when adapt is set.
    std::string label() const;
};

struct ExperimentSpec {
    TaskKind task = TaskKind::Figure1;
    std::vector<MethodSpec> methods;
    std::vector<double> budgets;
    std::vector<std::uint64_t> seeds;
    std::vector<MetricSpec> metrics;
    std::filesystem::path output = "results";

    MonteCarloConfig mc;  // seed is derived per experiment seed
    std::optional<BinarySimConfig> binary;
    std::optional<MulticlassSimConfig> multiclass;

    // label_shift
    PriorEstimate train_priors;
    PriorEstimate test_priors;
    std::size_t pool_size = 20000;
    std::size_t shifted_size = 10000;
    double em_tolerance = 1e-6;
    std::size_t em_max_iter = 1000;

    // kappa_convergence
    std::vector<std::size_t> mc_ladder = {8, 32, 128, 512, 2048};
    std::size_t mc_replicates = 1;

    // custom
    std::filesystem::path input;
    std::optional<std::filesystem::path> validation;
    std::optional<CalibratorKind> calibrate;

    void validate() const;
};

std::string_view task_name(TaskKind task);
TaskKind parse_task(std::string_view name);
std::string_view method_kind_name(MethodKind kind);
MethodKind parse_method_kind(std::string_view name);

// Spec with the task's default methods, budgets, metrics and seeds 0..seeds-1.
ExperimentSpec default_experiment_spec(TaskKind task, std::size_t seeds = 20);

// Missing fields fall back to default_experiment_spec(task).
ExperimentSpec experiment_spec_from_json(const nlohmann::json& j);
nlohmann::json experiment_spec_to_json(const ExperimentSpec& spec);

MetricSpec metric_spec_from_json(const nlohmann::json& j);
nlohmann::json metric_spec_to_json(const MetricSpec& m);

// String-valued table; rows are kept in (seed, method, budget) order.
struct ResultTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const;
    void write_csv(const std::filesystem::path& path) const;
    static ResultTable read_csv(const std::filesystem::path& path);
};

struct ExperimentResult {
    ResultTable results;
    // label_shift / adapted custom runs: per-seed EM prior estimates.
    ResultTable priors;
};

ExperimentResult run_experiment(const ExperimentSpec& spec);

// Writes results.csv (and priors.csv when non-empty) plus manifest.json with
// the resolved spec and a creation timestamp into spec.output.
void write_experiment_outputs(const ExperimentSpec& spec, const ExperimentResult& result);

struct ComparisonResult {
    std::vector<std::string> methods;
    std::vector<std::string> seeds;
    std::vector<std::vector<double>> values;   // [method][seed]
    std::vector<std::vector<double>> p_values; // [i][j]: one-sided test that i beats j
    std::vector<std::vector<bool>> significant;
    double alpha = 0.05;
};

// Pairs rows by seed and compares every ordered method pair on one value
// column at one budget. Pairs with fewer than 5 nonzero differences get p = 1.
ComparisonResult compare_methods(const ResultTable& table, const std::string& value_column, double budget,
                                 double alpha = 0.05);
nlohmann::json comparison_to_json(const ComparisonResult& cmp);

}  // namespace abstain
