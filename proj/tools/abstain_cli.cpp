// abstain: simulate, calibrate, adapt, score and evaluate metric-specific
// abstention from the command line. Failures print one line
//   error: <Code>: <message>
// to stderr and exit nonzero (1 for library errors, 2 for usage errors).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "abstain/baselines.hpp"
#include "abstain/calibration.hpp"
#include "abstain/error.hpp"
#include "abstain/evaluation.hpp"
#include "abstain/experiment.hpp"
#include "abstain/fumera.hpp"
#include "abstain/io.hpp"
#include "abstain/label_shift.hpp"
#include "abstain/scorers.hpp"
#include "abstain/selection.hpp"
#include "abstain/simulation.hpp"

using nlohmann::json;
namespace ab = abstain;

namespace {

struct ScoringFlags {
    std::string metric = "auroc";
    double target_specificity = 0.9;
    std::string weights = "quadratic";
    std::size_t mc_samples = 100;
    bool smooth = true;
    std::string mode = "deterministic";
    std::uint64_t seed = 0;
};

void add_metric_flags(CLI::App* cmd, ScoringFlags& f) {
    cmd->add_option("--metric", f.metric, "auroc | sens_at_spec | weighted_kappa")->capture_default_str();
    cmd->add_option("--target-specificity", f.target_specificity, "target specificity for sens_at_spec")
        ->capture_default_str();
    cmd->add_option("--weights", f.weights, "kappa penalty weights: quadratic | zero_one")->capture_default_str();
}

void add_scoring_flags(CLI::App* cmd, ScoringFlags& f) {
    add_metric_flags(cmd, f);
    cmd->add_option("--mc-samples", f.mc_samples, "Monte-Carlo samples")->capture_default_str();
    cmd->add_flag("--smooth,!--no-smooth", f.smooth, "Savitzky-Golay smoothing of Monte-Carlo window scores");
    cmd->add_option("--mode", f.mode, "deterministic | monte_carlo")->capture_default_str();
    cmd->add_option("--seed", f.seed, "RNG seed")->capture_default_str();
}

ab::MetricSpec metric_from_flags(const ScoringFlags& f, std::size_t classes) {
    if (f.metric == "auroc") return ab::MetricSpec::auroc();
    if (f.metric == "sens_at_spec") return ab::MetricSpec::sens_at_spec(f.target_specificity);
    if (f.metric == "weighted_kappa") {
        if (f.weights == "quadratic") return ab::MetricSpec::weighted_kappa(ab::PenaltyWeightMatrix::quadratic(classes));
        if (f.weights == "zero_one") return ab::MetricSpec::weighted_kappa(ab::PenaltyWeightMatrix::zero_one(classes));
        ab::fail(ab::ErrorCode::InvalidArgument, "unknown weights '" + f.weights + "'");
    }
    ab::fail(ab::ErrorCode::InvalidArgument, "unknown metric '" + f.metric + "'");
}

ab::ScorerMode mode_from_flags(const ScoringFlags& f) {
    if (f.mode == "deterministic") return ab::ScorerMode::Deterministic;
    if (f.mode == "monte_carlo" || f.mode == "mc") return ab::ScorerMode::MonteCarlo;
    ab::fail(ab::ErrorCode::InvalidArgument, "unknown mode '" + f.mode + "'");
}

ab::MonteCarloConfig mc_from_flags(const ScoringFlags& f) {
    ab::MonteCarloConfig mc;
    mc.samples = f.mc_samples;
    mc.seed = f.seed;
    mc.smooth = f.smooth;
    return mc;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    for (const auto& cell : ab::split_csv_line(s)) {
        try {
            out.push_back(std::stod(cell));
        } catch (const std::logic_error&) {
            ab::fail(ab::ErrorCode::InvalidArgument, "not a number: '" + cell + "'");
        }
    }
    return out;
}

void emit_json(const json& j, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << j.dump(2) << '\n';
    } else {
        ab::write_json_file(path, j);
    }
}

// Strips an optional `variance` column.
std::optional<std::vector<double>> split_variance(ab::PredictionTable& t) {
    auto it = std::find(t.value_columns.begin(), t.value_columns.end(), "variance");
    if (it == t.value_columns.end()) return std::nullopt;
    const auto col = static_cast<std::size_t>(it - t.value_columns.begin());
    const std::size_t w = t.width();
    std::vector<double> var(t.rows()), rest;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            if (c == col) var[r] = t.value(r, c);
            else rest.push_back(t.value(r, c));
        }
    }
    t.value_columns.erase(it);
    t.values = std::move(rest);
    return var;
}


// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
    std::string config;
    std::string preset = "figure1";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n;
    bool raw = false;
    std::string output;
};

int run_simulate(const SimulateArgs& a) {
    json cfg_json;
    if (!a.config.empty()) cfg_json = ab::read_json_file(a.config);
    const bool multiclass = a.config.empty() ? a.preset == "kappa_convergence" : cfg_json.contains("priors");
    if (a.config.empty() && a.preset != "figure1" && a.preset != "kappa_convergence") {
        ab::fail(ab::ErrorCode::InvalidArgument, "unknown preset '" + a.preset + "'");
    }

    ab::PredictionTable table;
    if (multiclass) {
        auto cfg = a.config.empty() ? ab::kappa_convergence_config(0) : ab::multiclass_config_from_json(cfg_json);
        if (a.seed) cfg.seed = *a.seed;
        if (a.n) cfg.n = *a.n;
        auto sim = ab::simulate_multiclass(cfg);
        std::vector<std::optional<ab::Label>> labels(sim.labels.begin(), sim.labels.end());
        if (a.raw) {
            table.labels = labels;
            table.value_columns = {"score"};
            table.values = sim.raw_values;
            for (std::size_t r = 0; r < sim.labels.size(); ++r) table.ids.push_back(std::to_string(r));
        } else {
            table = ab::make_probability_table(sim.posteriors, labels);
        }
    } else {
        auto cfg = a.config.empty() ? ab::figure1_config(0) : ab::binary_config_from_json(cfg_json);
        if (a.seed) cfg.seed = *a.seed;
        if (a.n) cfg.n = *a.n;
        auto sim = ab::simulate_binary(cfg);
        std::vector<std::optional<ab::Label>> labels(sim.labels.begin(), sim.labels.end());
        if (a.raw) {
            table.labels = labels;
            table.value_columns = {"score"};
            table.values = sim.raw_values;
            for (std::size_t r = 0; r < sim.labels.size(); ++r) table.ids.push_back(std::to_string(r));
        } else {
            table = ab::make_probability_table(ab::ProbabilityMatrix::from_binary(sim.posteriors), labels);
        }
    }
    if (a.output.empty()) ab::fail(ab::ErrorCode::InvalidArgument, "--output is required");
    ab::write_prediction_csv(a.output, table);
    return 0;
}

// ---- calibrate ------------------------------------------------------------

struct CalibrateArgs {
    std::string input;
    std::string kind = "temperature";
    std::string output;
    std::string apply;
    std::string predictions;
};

ab::ProbabilityMatrix calibrate_table(const ab::Calibrator& cal, const ab::PredictionTable& t) {
    if (cal.kind == ab::CalibratorKind::Platt) {
        if (t.width() != 1) ab::fail(ab::ErrorCode::SchemaError, "Platt scaling expects one score column");
        return ab::ProbabilityMatrix::from_binary(ab::apply_calibrator(cal, t.values));
    }
    return ab::apply_calibrator(cal, ab::LogitMatrix{t.rows(), t.width(), t.values});
}

int run_calibrate(const CalibrateArgs& a) {
    auto val = ab::read_prediction_csv(a.input);
    split_variance(val);
    const auto labels = val.require_labels();
    const auto kind = ab::parse_calibrator_kind(a.kind);
    ab::Calibrator cal;
    if (kind == ab::CalibratorKind::Platt) {
        if (val.width() != 1) ab::fail(ab::ErrorCode::SchemaError, "Platt scaling expects one score column");
        cal = ab::fit_platt(val.values, labels);
    } else {
        cal = ab::fit_temperature(ab::LogitMatrix{val.rows(), val.width(), val.values}, labels, kind);
    }
    json j = ab::calibrator_to_json(cal);
    emit_json(j, a.output);

    if (!a.apply.empty()) {
        auto test = ab::read_prediction_csv(a.apply);
        split_variance(test);
        if (a.predictions.empty()) ab::fail(ab::ErrorCode::InvalidArgument, "--apply needs --predictions");
        ab::write_prediction_csv(a.predictions, ab::make_probability_table(calibrate_table(cal, test), test.labels,
                                                                           test.ids));
    }
    return 0;
}

// ---- adapt ----------------------------------------------------------------

struct AdaptArgs {
    std::string input;
    std::string train_priors;
    std::string validation;
    double tol = 1e-6;
    std::size_t max_iter = 1000;
    std::string output;
    std::string report;
};

ab::PriorEstimate resolve_priors(const std::string& list, const std::string& validation, std::size_t classes) {
    if (!list.empty()) {
        ab::PriorEstimate p(parse_list(list));
        if (p.size() != classes) ab::fail(ab::ErrorCode::DimensionMismatch, "prior count differs from class count");
        return p;
    }
    if (!validation.empty()) {
        auto val = ab::read_prediction_csv(validation);
        return ab::PriorEstimate::empirical(val.require_labels(), classes);
    }
    ab::fail(ab::ErrorCode::MissingPriors, "pass --train-priors or --validation");
}

int run_adapt(const AdaptArgs& a) {
    auto t = ab::read_prediction_csv(a.input);
    split_variance(t);
    const auto P = t.probability_matrix();
    const auto train = resolve_priors(a.train_priors, a.validation, P.class_count());
    auto res = ab::adapt_label_shift_em(P, train, a.tol, a.max_iter);
    if (a.output.empty()) ab::fail(ab::ErrorCode::InvalidArgument, "--output is required");
    ab::write_prediction_csv(a.output, ab::make_probability_table(res.adapted_probs, t.labels, t.ids));
    json report{{"train_priors", std::vector<double>(train.values().begin(), train.values().end())},
                {"test_priors", std::vector<double>(res.test_priors.values().begin(), res.test_priors.values().end())},
                {"iterations", res.iterations},
                {"converged", res.converged}};
    emit_json(report, a.report);
    return 0;
}

// ---- abstain --------------------------------------------------------------

struct AbstainArgs {
    std::string input;
    std::string method = "est_auroc";
    double budget = 0.1;
    std::string train_priors;
    std::string validation;
    std::string output;
    ScoringFlags flags;
};

int run_abstain(const AbstainArgs& a) {
    auto t = ab::read_prediction_csv(a.input);
    auto variance = split_variance(t);
    const auto P = t.probability_matrix();
    const std::size_t n = P.rows();
    const std::size_t d = ab::budget_count(a.budget, n);
    const auto kind = ab::parse_method_kind(a.method);
    const auto mc = mc_from_flags(a.flags);
    const auto mode = mode_from_flags(a.flags);

    std::vector<std::size_t> picked;
    std::optional<double> estimate;
    auto window_pick = [&](const ab::SortedPredictionSet& sorted, const ab::WindowScoreVector& scores) {
        auto sel = ab::select_abstentions(scores, {d, ab::SelectionMode::Window});
        estimate = scores.scores[sel.front()];
        for (auto k : sel) picked.push_back(sorted.order()[k]);
        std::sort(picked.begin(), picked.end());
    };

    if (d > 0) {
        switch (kind) {
            case ab::MethodKind::EstSensAtSpec:
            case ab::MethodKind::EstAuroc: {
                if (P.class_count() != 2) {
                    ab::fail(ab::ErrorCode::DimensionMismatch, "window scorers need binary predictions");
                }
                auto pos = P.column(1);
                auto sorted = ab::SortedPredictionSet::from_unsorted(pos);
                if (kind == ab::MethodKind::EstSensAtSpec) {
                    window_pick(sorted, ab::score_windows_sens_at_spec(sorted, a.flags.target_specificity, d, mc));
                } else {
                    window_pick(sorted, ab::score_windows_auroc(sorted, d, mode, mc));
                }
                break;
            }
            case ab::MethodKind::EstKappa: {
                auto metric = metric_from_flags(a.flags, P.class_count());
                auto W = metric.kind == ab::MetricKind::WeightedKappa ? metric.weights
                                                                      : ab::PenaltyWeightMatrix::quadratic(P.class_count());
                picked = ab::select_abstentions(ab::score_examples_kappa(P, W, mode, mc), {d, ab::SelectionMode::TopK});
                break;
            }
            case ab::MethodKind::JsDivergence: {
                auto priors = resolve_priors(a.train_priors, a.validation, P.class_count());
                picked = ab::select_top_k(ab::baseline_scores(P, ab::BaselineMethod::JsDivergenceFromPriors, priors), d);
                break;
            }
            case ab::MethodKind::MaxClassProb:
                picked = ab::select_top_k(ab::baseline_scores(P, ab::BaselineMethod::MaxClassProb), d);
                break;
            case ab::MethodKind::Entropy:
                picked = ab::select_top_k(ab::baseline_scores(P, ab::BaselineMethod::Entropy), d);
                break;
            case ab::MethodKind::ExternalVariance: {
                std::optional<std::span<const double>> var;
                if (variance) var = std::span<const double>(*variance);
                picked = ab::select_top_k(
                    ab::baseline_scores(P, ab::BaselineMethod::ExternalVariance, std::nullopt, var), d);
                break;
            }
            case ab::MethodKind::Fumera: {
                if (a.validation.empty()) ab::fail(ab::ErrorCode::InvalidConfig, "fumera needs --validation");
                auto val = ab::read_prediction_csv(a.validation);
                split_variance(val);
                auto fit = ab::fumera_threshold_search(val.probability_matrix(), val.require_labels(),
                                                       metric_from_flags(a.flags, P.class_count()), a.budget);
                picked = ab::apply_class_thresholds(P, fit.thresholds);
                if (picked.size() > d) {
                    // Keep the d least confident of the thresholded examples.
                    std::vector<double> prio;
                    for (auto x : picked) {
                        auto row = P.row(x);
                        prio.push_back(-*std::max_element(row.begin(), row.end()));
                    }
                    std::vector<std::size_t> kept;
                    for (auto k : ab::select_top_k(prio, d)) kept.push_back(picked[k]);
                    std::sort(kept.begin(), kept.end());
                    picked = std::move(kept);
                }
                break;
            }
        }
    }

    json ids = json::array();
    for (auto x : picked) ids.push_back(t.ids[x]);
    json out{{"method", a.method},
             {"budget", a.budget},
             {"n", n},
             {"abstained_count", picked.size()},
             {"abstained_indices", picked},
             {"abstained_ids", ids},
             {"estimated_metric", estimate ? json(*estimate) : json(nullptr)}};
    emit_json(out, a.output);
    return 0;
}

// ---- evaluate -------------------------------------------------------------

struct EvaluateArgs {
    std::string input;
    std::string abstained;
    std::string output;
    ScoringFlags flags;
};

int run_evaluate(const EvaluateArgs& a) {
    auto t = ab::read_prediction_csv(a.input);
    split_variance(t);
    const auto labels = t.require_labels();
    const auto P = t.probability_matrix();
    std::vector<std::size_t> dropped;
    if (!a.abstained.empty()) {
        auto j = ab::read_json_file(a.abstained);
        if (!j.contains("abstained_indices")) {
            ab::fail(ab::ErrorCode::SchemaError, "abstention file needs 'abstained_indices'");
        }
        dropped = j.at("abstained_indices").get<std::vector<std::size_t>>();
    }
    const auto metric = metric_from_flags(a.flags, P.class_count());
    const double value = ab::evaluate_metric(metric, P, labels, dropped);
    json out{{"metric", metric.name()},
             {"value", value},
             {"n", P.rows()},
             {"retained", P.rows() - dropped.size()}};
    emit_json(out, a.output);
    return 0;
}

// ---- experiment / compare -------------------------------------------------

struct ExperimentArgs {
    std::string spec;
    std::string task;
    std::size_t seeds = 20;
    std::string output;
};

int run_experiment_cmd(const ExperimentArgs& a) {
    ab::ExperimentSpec spec;
    if (!a.spec.empty()) {
        spec = ab::experiment_spec_from_json(ab::read_json_file(a.spec));
    } else if (!a.task.empty()) {
        spec = ab::default_experiment_spec(ab::parse_task(a.task), a.seeds);
    } else {
        ab::fail(ab::ErrorCode::InvalidArgument, "pass --spec or --task");
    }
    if (!a.output.empty()) spec.output = a.output;
    auto result = ab::run_experiment(spec);
    ab::write_experiment_outputs(spec, result);
    std::cout << "wrote " << result.results.rows.size() << " rows to " << (spec.output / "results.csv").string()
              << '\n';
    return 0;
}

struct CompareArgs {
    std::string input;
    std::string column = "post_auroc";
    double budget = 0.1;
    double alpha = 0.05;
    std::string output;
};

int run_compare(const CompareArgs& a) {
    auto table = ab::ResultTable::read_csv(a.input);
    auto cmp = ab::compare_methods(table, a.column, a.budget, a.alpha);
    json j = ab::comparison_to_json(cmp);
    j["column"] = a.column;
    j["budget"] = a.budget;
    emit_json(j, a.output);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Metric-specific abstention for calibrated classifiers"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "emit a simulated dataset CSV");
    c_sim->add_option("--config", sim.config, "simulation config JSON (binary, or multiclass with 'priors')");
    c_sim->add_option("--preset", sim.preset, "figure1 | kappa_convergence when no config is given")
        ->capture_default_str();
    c_sim->add_option("--seed", sim.seed, "override the config seed");
    c_sim->add_option("--n", sim.n, "override the example count");
    c_sim->add_flag("--raw", sim.raw, "emit raw simulated values as a `score` column instead of posteriors");
    c_sim->add_option("--output", sim.output, "output CSV")->required();

    CalibrateArgs cal;
    auto* c_cal = app.add_subcommand("calibrate", "fit a calibrator on labelled raw scores");
    c_cal->add_option("--input", cal.input, "validation CSV with `score` or `z_*` columns")->required();
    c_cal->add_option("--kind", cal.kind, "platt | temperature | bcts")->capture_default_str();
    c_cal->add_option("--output", cal.output, "calibrator JSON (stdout when omitted)");
    c_cal->add_option("--apply", cal.apply, "raw-score CSV to calibrate with the fitted calibrator");
    c_cal->add_option("--predictions", cal.predictions, "where to write the calibrated --apply predictions");

    AdaptArgs ad;
    auto* c_ad = app.add_subcommand("adapt", "EM label-shift adaptation of test predictions");
    c_ad->add_option("--input", ad.input, "test prediction CSV")->required();
    c_ad->add_option("--train-priors", ad.train_priors, "comma-separated training priors");
    c_ad->add_option("--validation", ad.validation, "labelled CSV whose class frequencies give the training priors");
    c_ad->add_option("--tol", ad.tol, "convergence tolerance")->capture_default_str();
    c_ad->add_option("--max-iter", ad.max_iter, "iteration cap")->capture_default_str();
    c_ad->add_option("--output", ad.output, "adapted prediction CSV")->required();
    c_ad->add_option("--report", ad.report, "prior report JSON (stdout when omitted)");

    AbstainArgs abs;
    auto* c_abs = app.add_subcommand("abstain", "score and select examples to abstain on");
    c_abs->add_option("--input", abs.input, "prediction CSV")->required();
    c_abs->add_option("--method", abs.method,
                      "est_sens_at_spec | est_auroc | est_kappa | js_divergence | max_class_prob | entropy | "
                      "external_variance | fumera")
        ->capture_default_str();
    c_abs->add_option("--budget", abs.budget, "abstention fraction in [0, 1)")->capture_default_str();
    c_abs->add_option("--train-priors", abs.train_priors, "comma-separated priors for js_divergence");
    c_abs->add_option("--validation", abs.validation, "labelled validation CSV (fumera, or priors for js_divergence)");
    c_abs->add_option("--output", abs.output, "selection JSON (stdout when omitted)");
    add_scoring_flags(c_abs, abs.flags);

    EvaluateArgs ev;
    auto* c_ev = app.add_subcommand("evaluate", "metric on retained examples using true labels");
    c_ev->add_option("--input", ev.input, "labelled prediction CSV")->required();
    c_ev->add_option("--abstained", ev.abstained, "selection JSON from `abstain`");
    c_ev->add_option("--output", ev.output, "result JSON (stdout when omitted)");
    add_metric_flags(c_ev, ev.flags);

    ExperimentArgs ex;
    auto* c_ex = app.add_subcommand("experiment", "run a full experiment grid");
    c_ex->add_option("--spec", ex.spec, "experiment spec JSON");
    c_ex->add_option("--task", ex.task, "run a task with its default settings instead of a spec");
    c_ex->add_option("--seeds", ex.seeds, "seed count for --task")->capture_default_str();
    c_ex->add_option("--output", ex.output, "output directory (overrides the one in --spec)");

    CompareArgs cmp;
    auto* c_cmp = app.add_subcommand("compare", "pairwise one-sided Wilcoxon tests from a results CSV");
    c_cmp->add_option("--input", cmp.input, "results.csv from `experiment`")->required();
    c_cmp->add_option("--column", cmp.column, "value column to compare")->capture_default_str();
    c_cmp->add_option("--budget", cmp.budget, "budget rows to compare")->capture_default_str();
    c_cmp->add_option("--alpha", cmp.alpha, "significance level")->capture_default_str();
    c_cmp->add_option("--output", cmp.output, "comparison JSON (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        std::fprintf(stderr, "error: UsageError: %s\n", msg.c_str());
        return 2;
    }

    try {
        if (c_sim->parsed()) return run_simulate(sim);
        if (c_cal->parsed()) return run_calibrate(cal);
        if (c_ad->parsed()) return run_adapt(ad);
        if (c_abs->parsed()) return run_abstain(abs);
        if (c_ev->parsed()) return run_evaluate(ev);
        if (c_ex->parsed()) return run_experiment_cmd(ex);
        if (c_cmp->parsed()) return run_compare(cmp);
    } catch (const ab::Error& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        std::fprintf(stderr, "error: %s: %s\n", std::string(e.name()).c_str(), msg.c_str());
        return 1;
    } catch (const std::exception& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        std::fprintf(stderr, "error: Internal: %s\n", msg.c_str());
        return 1;
    }
    return 0;
}
