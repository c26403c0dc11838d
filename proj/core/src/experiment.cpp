#include "abstain/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "abstain/baselines.hpp"
#include "abstain/error.hpp"
#include "abstain/fumera.hpp"
#include "abstain/io.hpp"
#include "abstain/label_shift.hpp"
#include "abstain/rng.hpp"
#include "abstain/selection.hpp"
#include "abstain/stats.hpp"

namespace abstain {

using nlohmann::json;

namespace {

constexpr std::string_view kVersion = "0.3.0";

struct NamedTask {
    TaskKind kind;
    std::string_view name;
};
constexpr NamedTask kTasks[] = {
    {TaskKind::Figure1, "figure1"},
    {TaskKind::AurocCorrelation, "auroc_correlation"},
    {TaskKind::KappaConvergence, "kappa_convergence"},
    {TaskKind::LabelShift, "label_shift"},
    {TaskKind::Custom, "custom"},
};

struct NamedMethod {
    MethodKind kind;
    std::string_view name;
};
constexpr NamedMethod kMethods[] = {
    {MethodKind::EstSensAtSpec, "est_sens_at_spec"},
    {MethodKind::EstAuroc, "est_auroc"},
    {MethodKind::EstKappa, "est_kappa"},
    {MethodKind::JsDivergence, "js_divergence"},
    {MethodKind::MaxClassProb, "max_class_prob"},
    {MethodKind::Entropy, "entropy"},
    {MethodKind::ExternalVariance, "external_variance"},
    {MethodKind::Fumera, "fumera"},
};

MethodSpec make_method(MethodKind kind, ScorerMode mode = ScorerMode::Deterministic, double s = 0.9,
                       bool adapt = false) {
    MethodSpec m;
    m.kind = kind;
    m.name = std::string(method_kind_name(kind));
    m.mode = mode;
    m.target_specificity = s;
    m.adapt = adapt;
    return m;
}

std::string_view mode_name(ScorerMode mode) {
    return mode == ScorerMode::MonteCarlo ? "monte_carlo" : "deterministic";
}

ScorerMode parse_mode(std::string_view s) {
    if (s == "monte_carlo" || s == "mc") return ScorerMode::MonteCarlo;
    if (s == "deterministic") return ScorerMode::Deterministic;
    fail(ErrorCode::SchemaError, "unknown scorer mode '" + std::string(s) + "'");
}

bool safe_cell(std::string_view s) {
    return !s.empty() && s.find_first_of(",\"\n\r") == std::string_view::npos;
}

std::uint64_t mc_seed_for(std::uint64_t seed, std::size_t method_index) {
    return splitmix64(splitmix64(seed) ^ (0x9E3779B97F4A7C15ULL * (method_index + 1)));
}

std::uint64_t validation_seed(std::uint64_t seed) { return splitmix64(seed ^ 0x7A11DA7E0000ULL); }
std::uint64_t resample_seed(std::uint64_t seed) { return splitmix64(seed ^ 0x5A3B1E0000ULL); }

template <typename F>
auto with_context(const std::string& context, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        throw Error(e.code(), context + ": " + e.what());
    }
}

json priors_json(const PriorEstimate& p) { return json(std::vector<double>(p.values().begin(), p.values().end())); }

PriorEstimate binary_priors(double q) { return PriorEstimate({1.0 - q, q}); }

// A labelled test set plus whatever the methods may need around it.
struct Dataset {
    ProbabilityMatrix probs;
    LabelVector labels;
    std::optional<PriorEstimate> train_priors;
    std::optional<std::vector<double>> true_priors;
    std::optional<std::vector<double>> variance;
    std::optional<ProbabilityMatrix> val_probs;
    LabelVector val_labels;
};

bool needs_validation(const ExperimentSpec& spec) {
    return std::any_of(spec.methods.begin(), spec.methods.end(),
                       [](const MethodSpec& m) { return m.kind == MethodKind::Fumera; });
}

// Fumera thresholds are fit on validation data and may abstain on more test
// examples than the budget allows; keep only the `cap` least confident ones.
std::vector<std::size_t> cap_abstentions(const ProbabilityMatrix& probs, std::vector<std::size_t> idx,
                                         std::size_t cap) {
    if (idx.size() <= cap) return idx;
    std::vector<double> priority(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        auto row = probs.row(idx[k]);
        priority[k] = -*std::max_element(row.begin(), row.end());
    }
    auto keep = select_top_k(priority, cap);
    std::vector<std::size_t> out;
    out.reserve(cap);
    for (auto k : keep) out.push_back(idx[k]);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::size_t> window_to_original(const SortedPredictionSet& sorted, std::span<const std::size_t> sel) {
    std::vector<std::size_t> out;
    out.reserve(sel.size());
    for (auto k : sel) out.push_back(sorted.order()[k]);
    std::sort(out.begin(), out.end());
    return out;
}

struct GridRow {
    std::uint64_t seed;
    std::size_t method_index;
    double budget;
    std::vector<std::string> cells;
};

std::vector<std::string> grid_header(const ExperimentSpec& spec) {
    std::vector<std::string> h = {"seed", "method", "adapted", "budget", "n", "abstained"};
    for (const auto& m : spec.metrics) {
        h.push_back("pre_" + m.name());
        h.push_back("post_" + m.name());
    }
    return h;
}

std::vector<std::size_t> choose_abstentions(const ExperimentSpec& spec, const MethodSpec& method,
                                            std::size_t method_index, std::uint64_t seed, const ProbabilityMatrix& P,
                                            const std::optional<SortedPredictionSet>& sorted,
                                            const std::optional<PriorEstimate>& priors, const Dataset& data,
                                            const std::optional<ProbabilityMatrix>& val_probs,
                                            const std::vector<double>* kappa_scores, double budget, std::size_t d) {
    MonteCarloConfig mc = spec.mc;
    mc.seed = mc_seed_for(seed, method_index);
    switch (method.kind) {
        case MethodKind::EstSensAtSpec: {
            if (!sorted) fail(ErrorCode::DimensionMismatch, "sensitivity scorer requires binary predictions");
            auto scores = score_windows_sens_at_spec(*sorted, method.target_specificity, d, mc);
            return window_to_original(*sorted, select_abstentions(scores, {d, SelectionMode::Window}));
        }
        case MethodKind::EstAuroc: {
            if (!sorted) fail(ErrorCode::DimensionMismatch, "auROC scorer requires binary predictions");
            auto scores = score_windows_auroc(*sorted, d, method.mode, mc);
            return window_to_original(*sorted, select_abstentions(scores, {d, SelectionMode::Window}));
        }
        case MethodKind::EstKappa:
            return select_top_k(*kappa_scores, d);
        case MethodKind::JsDivergence:
            return select_top_k(baseline_scores(P, BaselineMethod::JsDivergenceFromPriors, priors), d);
        case MethodKind::MaxClassProb:
            return select_top_k(baseline_scores(P, BaselineMethod::MaxClassProb), d);
        case MethodKind::Entropy:
            return select_top_k(baseline_scores(P, BaselineMethod::Entropy), d);
        case MethodKind::ExternalVariance: {
            std::optional<std::span<const double>> var;
            if (data.variance) var = std::span<const double>(*data.variance);
            return select_top_k(baseline_scores(P, BaselineMethod::ExternalVariance, std::nullopt, var), d);
        }
        case MethodKind::Fumera: {
            if (!val_probs) fail(ErrorCode::InvalidConfig, "fumera needs labelled validation data");
            auto fit = fumera_threshold_search(*val_probs, data.val_labels, spec.metrics.front(), budget);
            return cap_abstentions(P, apply_class_thresholds(P, fit.thresholds), d);
        }
    }
    return {};
}

void run_grid(const ExperimentSpec& spec, std::uint64_t seed, const Dataset& data, std::vector<GridRow>& out,
              ResultTable& priors_table) {
    const std::size_t n = data.probs.rows();
    const bool any_adapt = std::any_of(spec.methods.begin(), spec.methods.end(),
                                       [](const MethodSpec& m) { return m.adapt; });
    std::optional<LabelShiftResult> adapted;
    if (any_adapt) {
        if (!data.train_priors) fail(ErrorCode::MissingPriors, "label-shift adaptation needs training priors");
        adapted = adapt_label_shift_em(data.probs, *data.train_priors, spec.em_tolerance, spec.em_max_iter);
        const auto seed_s = std::to_string(seed);
        for (std::size_t c = 0; c < data.probs.class_count(); ++c) {
            priors_table.rows.push_back({seed_s, std::to_string(c), format_double((*data.train_priors)[c]),
                                         data.true_priors ? format_double((*data.true_priors)[c]) : "",
                                         format_double(adapted->test_priors[c]), std::to_string(adapted->iterations),
                                         adapted->converged ? "1" : "0"});
        }
    }

    for (std::size_t mi = 0; mi < spec.methods.size(); ++mi) {
        const MethodSpec& method = spec.methods[mi];
        const std::string context = "seed " + std::to_string(seed) + ", method " + method.label();
        with_context(context, [&] {
            const ProbabilityMatrix& P = method.adapt ? adapted->adapted_probs : data.probs;
            std::optional<PriorEstimate> priors = data.train_priors;
            if (method.adapt) priors = adapted->test_priors;
            if (method.kind == MethodKind::JsDivergence && !priors) {
                fail(ErrorCode::MissingPriors, "JS-divergence baseline needs class priors");
            }

            std::optional<SortedPredictionSet> sorted;
            if (P.class_count() == 2 &&
                (method.kind == MethodKind::EstSensAtSpec || method.kind == MethodKind::EstAuroc)) {
                auto pos = P.column(1);
                sorted = SortedPredictionSet::from_unsorted(pos);
            }
            std::optional<ProbabilityMatrix> val_probs = data.val_probs;
            if (method.adapt && val_probs) {
                val_probs = reweight_priors(*val_probs, *data.train_priors, adapted->test_priors);
            }
            std::vector<double> kappa_scores;
            if (method.kind == MethodKind::EstKappa) {
                auto it = std::find_if(spec.metrics.begin(), spec.metrics.end(),
                                       [](const MetricSpec& m) { return m.kind == MetricKind::WeightedKappa; });
                PenaltyWeightMatrix W = it != spec.metrics.end() ? it->weights
                                                                 : PenaltyWeightMatrix::quadratic(P.class_count());
                MonteCarloConfig mc = spec.mc;
                mc.seed = mc_seed_for(seed, mi);
                kappa_scores = score_examples_kappa(P, W, method.mode, mc).scores;
            }

            std::vector<double> pre;
            pre.reserve(spec.metrics.size());
            for (const auto& m : spec.metrics) pre.push_back(evaluate_metric(m, P, data.labels));

            for (double budget : spec.budgets) {
                const std::size_t d = budget_count(budget, n);
                std::vector<std::size_t> abstained;
                if (d > 0) {
                    abstained = choose_abstentions(spec, method, mi, seed, P, sorted, priors, data, val_probs,
                                                   &kappa_scores, budget, d);
                }
                GridRow row{seed, mi, budget, {}};
                row.cells = {std::to_string(seed),      method.name,         method.adapt ? "1" : "0",
                             format_double(budget),     std::to_string(n),   std::to_string(abstained.size())};
                for (std::size_t k = 0; k < spec.metrics.size(); ++k) {
                    row.cells.push_back(format_double(pre[k]));
                    row.cells.push_back(abstained.empty()
                                            ? format_double(pre[k])
                                            : format_double(evaluate_metric(spec.metrics[k], P, data.labels,
                                                                            abstained)));
                }
                out.push_back(std::move(row));
            }
        });
    }
}

Dataset simulated_binary(const BinarySimConfig& cfg, bool want_validation, std::uint64_t seed) {
    auto sim = simulate_binary(cfg);
    Dataset data;
    data.probs = ProbabilityMatrix::from_binary(sim.posteriors);
    data.labels = std::move(sim.labels);
    data.train_priors = binary_priors(cfg.positive_prior);
    if (want_validation) {
        BinarySimConfig vcfg = cfg;
        vcfg.seed = validation_seed(seed);
        auto val = simulate_binary(vcfg);
        data.val_probs = ProbabilityMatrix::from_binary(val.posteriors);
        data.val_labels = std::move(val.labels);
    }
    return data;
}

Dataset label_shift_dataset(const ExperimentSpec& spec, std::uint64_t seed) {
    BinarySimConfig cfg = *spec.binary;
    cfg.seed = seed;
    cfg.n = spec.pool_size;
    auto pool = simulate_binary(cfg);
    auto shifted = resample_with_shift(pool.labels, spec.test_priors, spec.shifted_size, resample_seed(seed));
    std::vector<double> pos(shifted.source_indices.size());
    for (std::size_t k = 0; k < pos.size(); ++k) pos[k] = pool.posteriors[shifted.source_indices[k]];

    Dataset data;
    data.probs = ProbabilityMatrix::from_binary(pos);
    data.labels = std::move(shifted.labels);
    data.train_priors = binary_priors(cfg.positive_prior);
    std::vector<double> truth(shifted.class_counts.size());
    for (std::size_t c = 0; c < truth.size(); ++c) {
        truth[c] = static_cast<double>(shifted.class_counts[c]) / static_cast<double>(spec.shifted_size);
    }
    data.true_priors = std::move(truth);
    if (needs_validation(spec)) {
        BinarySimConfig vcfg = cfg;
        vcfg.n = spec.shifted_size;
        vcfg.seed = validation_seed(seed);
        auto val = simulate_binary(vcfg);
        data.val_probs = ProbabilityMatrix::from_binary(val.posteriors);
        data.val_labels = std::move(val.labels);
    }
    return data;
}

// Splits an optional `variance` column off a prediction table.
std::optional<std::vector<double>> take_variance(PredictionTable& t) {
    auto it = std::find(t.value_columns.begin(), t.value_columns.end(), "variance");
    if (it == t.value_columns.end()) return std::nullopt;
    const std::size_t col = static_cast<std::size_t>(it - t.value_columns.begin());
    const std::size_t w = t.width();
    std::vector<double> var(t.rows());
    std::vector<double> rest;
    rest.reserve(t.rows() * (w - 1));
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

std::vector<double> column_values(const PredictionTable& t, std::size_t c) {
    std::vector<double> v(t.rows());
    for (std::size_t r = 0; r < t.rows(); ++r) v[r] = t.value(r, c);
    return v;
}

LogitMatrix logits_of(const PredictionTable& t) {
    return LogitMatrix{t.rows(), t.width(), t.values};
}

ProbabilityMatrix calibrated_probs(const Calibrator& cal, const PredictionTable& t) {
    if (cal.kind == CalibratorKind::Platt) {
        if (t.width() != 1) fail(ErrorCode::SchemaError, "Platt scaling expects one score column");
        return ProbabilityMatrix::from_binary(apply_calibrator(cal, column_values(t, 0)));
    }
    return apply_calibrator(cal, logits_of(t));
}

Dataset custom_dataset(const ExperimentSpec& spec) {
    PredictionTable test = read_prediction_csv(spec.input);
    Dataset data;
    data.variance = take_variance(test);
    data.labels = test.require_labels();

    std::optional<PredictionTable> val;
    if (spec.validation) {
        val = read_prediction_csv(*spec.validation);
        take_variance(*val);
        data.val_labels = val->require_labels();
        if (val->width() != test.width()) fail(ErrorCode::SchemaError, "validation and test column counts differ");
    }

    if (spec.calibrate) {
        if (!val) fail(ErrorCode::InvalidConfig, "calibration needs a validation file");
        Calibrator cal;
        if (*spec.calibrate == CalibratorKind::Platt) {
            if (val->width() != 1) fail(ErrorCode::SchemaError, "Platt scaling expects one score column");
            cal = fit_platt(column_values(*val, 0), data.val_labels);
        } else {
            cal = fit_temperature(logits_of(*val), data.val_labels, *spec.calibrate);
        }
        data.probs = calibrated_probs(cal, test);
        data.val_probs = calibrated_probs(cal, *val);
    } else {
        data.probs = test.probability_matrix();
        if (val) data.val_probs = val->probability_matrix();
    }

    if (spec.train_priors.size() > 0) {
        if (spec.train_priors.size() != data.probs.class_count()) {
            fail(ErrorCode::DimensionMismatch, "train_priors length differs from class count");
        }
        data.train_priors = spec.train_priors;
    } else if (val) {
        data.train_priors = PriorEstimate::empirical(data.val_labels, data.probs.class_count());
    }
    return data;
}

ResultTable priors_table_template() {
    ResultTable t;
    t.header = {"seed", "class", "train_prior", "true_prior", "em_prior", "iterations", "converged"};
    return t;
}

ResultTable finish_grid(const ExperimentSpec& spec, std::vector<GridRow> rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const GridRow& a, const GridRow& b) {
        if (a.seed != b.seed) return a.seed < b.seed;
        if (a.method_index != b.method_index) return a.method_index < b.method_index;
        return a.budget < b.budget;
    });
    ResultTable t;
    t.header = grid_header(spec);
    t.rows.reserve(rows.size());
    for (auto& r : rows) t.rows.push_back(std::move(r.cells));
    return t;
}

ExperimentResult run_auroc_correlation(const ExperimentSpec& spec) {
    ExperimentResult res;
    res.results.header = {"seed", "n", "window", "mc_samples", "spearman", "pearson"};
    const double fraction = spec.budgets.front();
    std::vector<std::uint64_t> seeds = spec.seeds;
    std::sort(seeds.begin(), seeds.end());
    for (auto seed : seeds) {
        with_context("seed " + std::to_string(seed), [&] {
            BinarySimConfig cfg = sample_random_binary_config(seed);
            if (spec.binary) cfg.n = spec.binary->n;
            auto sim = simulate_binary(cfg);
            auto sorted = SortedPredictionSet::from_unsorted(sim.posteriors);
            const std::size_t d = budget_count(fraction, cfg.n);
            MonteCarloConfig mc = spec.mc;
            mc.seed = mc_seed_for(seed, 0);
            auto det = score_windows_auroc(sorted, d, ScorerMode::Deterministic, mc);
            auto est = score_windows_auroc(sorted, d, ScorerMode::MonteCarlo, mc);
            auto corr = rank_correlations(det.scores, est.scores);
            res.results.rows.push_back({std::to_string(seed), std::to_string(cfg.n), std::to_string(d),
                                        std::to_string(mc.samples), format_double(corr.spearman),
                                        format_double(corr.pearson)});
        });
    }
    return res;
}

ExperimentResult run_kappa_convergence(const ExperimentSpec& spec) {
    ExperimentResult res;
    res.results.header = {"seed", "mc_samples", "replicates", "mean_abs_diff"};
    std::vector<std::uint64_t> seeds = spec.seeds;
    std::sort(seeds.begin(), seeds.end());
    std::vector<std::size_t> ladder = spec.mc_ladder;
    std::sort(ladder.begin(), ladder.end());
    for (auto seed : seeds) {
        with_context("seed " + std::to_string(seed), [&] {
            MulticlassSimConfig cfg = *spec.multiclass;
            cfg.seed = seed;
            auto sim = simulate_multiclass(cfg);
            const auto W = PenaltyWeightMatrix::quadratic(cfg.priors.size());
            MonteCarloConfig mc = spec.mc;
            auto det = score_examples_kappa(sim.posteriors, W, ScorerMode::Deterministic, mc).scores;
            // Each replicate is an independent Monte-Carlo run; the reported
            // value is the replicate mean of the per-example mean |MC - det|.
            for (auto m : ladder) {
                mc.samples = m;
                double total = 0.0;
                for (std::size_t r = 0; r < spec.mc_replicates; ++r) {
                    mc.seed = mc_seed_for(seed, r);
                    auto est = score_examples_kappa(sim.posteriors, W, ScorerMode::MonteCarlo, mc).scores;
                    double sum = 0.0;
                    for (std::size_t x = 0; x < det.size(); ++x) sum += std::abs(det[x] - est[x]);
                    total += sum / static_cast<double>(det.size());
                }
                res.results.rows.push_back({std::to_string(seed), std::to_string(m), std::to_string(spec.mc_replicates),
                                            format_double(total / static_cast<double>(spec.mc_replicates))});
            }
        });
    }
    return res;
}

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Class count implied by a prediction CSV header: the value columns other
// than `variance`, with a single column meaning two classes.
std::size_t header_class_count(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::InputNotFound, "cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) fail(ErrorCode::SchemaError, path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto cells = split_csv_line(line);
    std::size_t values = 0;
    for (std::size_t c = 2; c < cells.size(); ++c) values += cells[c] != "variance";
    if (values == 0) fail(ErrorCode::SchemaError, path.string() + ": no value columns");
    return values == 1 ? 2 : values;
}

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view what) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
            fail(ErrorCode::SchemaError, "unknown key '" + it.key() + "' in " + std::string(what));
        }
    }
}

MethodSpec method_from_json(const json& j) {
    if (j.is_string()) return make_method(parse_method_kind(j.get<std::string>()));
    if (!j.is_object()) fail(ErrorCode::SchemaError, "method must be a string or an object");
    check_keys(j, {"kind", "name", "mode", "target_specificity", "adapt"}, "method");
    if (!j.contains("kind")) fail(ErrorCode::SchemaError, "method object needs 'kind'");
    MethodSpec m = make_method(parse_method_kind(j.at("kind").get<std::string>()));
    if (j.contains("name")) m.name = j.at("name").get<std::string>();
    if (j.contains("mode")) m.mode = parse_mode(j.at("mode").get<std::string>());
    if (j.contains("target_specificity")) m.target_specificity = j.at("target_specificity").get<double>();
    if (j.contains("adapt")) m.adapt = j.at("adapt").get<bool>();
    return m;
}

json method_to_json(const MethodSpec& m) {
    return json{{"kind", method_kind_name(m.kind)},
                {"name", m.name},
                {"mode", mode_name(m.mode)},
                {"target_specificity", m.target_specificity},
                {"adapt", m.adapt}};
}

}  // namespace

std::string MethodSpec::label() const { return adapt ? name + "+adapted" : name; }

std::string_view task_name(TaskKind task) {
    for (const auto& t : kTasks) {
        if (t.kind == task) return t.name;
    }
    return "unknown";
}

TaskKind parse_task(std::string_view name) {
    for (const auto& t : kTasks) {
        if (t.name == name) return t.kind;
    }
    fail(ErrorCode::SchemaError, "unknown task '" + std::string(name) + "'");
}

std::string_view method_kind_name(MethodKind kind) {
    for (const auto& m : kMethods) {
        if (m.kind == kind) return m.name;
    }
    return "unknown";
}

MethodKind parse_method_kind(std::string_view name) {
    for (const auto& m : kMethods) {
        if (m.name == name) return m.kind;
    }
    fail(ErrorCode::SchemaError, "unknown method '" + std::string(name) + "'");
}

void ExperimentSpec::validate() const {
    if (methods.empty()) fail(ErrorCode::InvalidConfig, "experiment needs at least one method");
    if (budgets.empty()) fail(ErrorCode::InvalidConfig, "experiment needs at least one budget");
    if (seeds.empty()) fail(ErrorCode::InvalidConfig, "experiment needs at least one seed");
    if (metrics.empty() && (task == TaskKind::Figure1 || task == TaskKind::LabelShift || task == TaskKind::Custom)) {
        fail(ErrorCode::InvalidConfig, "experiment needs at least one metric");
    }
    for (double b : budgets) {
        if (!(b >= 0.0 && b < 1.0)) fail(ErrorCode::InvalidConfig, "budget fractions must lie in [0, 1)");
    }
    std::vector<std::string> labels;
    for (const auto& m : methods) {
        if (!safe_cell(m.name)) fail(ErrorCode::InvalidConfig, "method name '" + m.name + "' is not CSV-safe");
        if (!(m.target_specificity >= 0.0 && m.target_specificity < 1.0)) {
            fail(ErrorCode::InvalidConfig, "target specificity must lie in [0, 1)");
        }
        labels.push_back(m.label());
    }
    std::sort(labels.begin(), labels.end());
    if (std::adjacent_find(labels.begin(), labels.end()) != labels.end()) {
        fail(ErrorCode::InvalidConfig, "method names must be unique per adaptation setting");
    }
    std::vector<std::uint64_t> s = seeds;
    std::sort(s.begin(), s.end());
    if (std::adjacent_find(s.begin(), s.end()) != s.end()) fail(ErrorCode::InvalidConfig, "duplicate seed");
    if (mc.samples == 0) fail(ErrorCode::InvalidConfig, "mc samples must be positive");

    switch (task) {
        case TaskKind::Figure1:
            if (!binary) fail(ErrorCode::InvalidConfig, "figure1 needs a binary simulation config");
            binary->validate();
            break;
        case TaskKind::AurocCorrelation:
            break;
        case TaskKind::KappaConvergence:
            if (!multiclass) fail(ErrorCode::InvalidConfig, "kappa_convergence needs a multiclass config");
            multiclass->validate();
            if (mc_ladder.empty()) fail(ErrorCode::InvalidConfig, "kappa_convergence needs an mc_ladder");
            if (std::find(mc_ladder.begin(), mc_ladder.end(), 0) != mc_ladder.end() || mc_replicates == 0) {
                fail(ErrorCode::InvalidConfig, "mc_ladder entries and mc_replicates must be positive");
            }
            break;
        case TaskKind::LabelShift:
            if (!binary) fail(ErrorCode::InvalidConfig, "label_shift needs a binary simulation config");
            binary->validate();
            if (test_priors.size() != 2) fail(ErrorCode::InvalidConfig, "label_shift needs two test priors");
            if (shifted_size == 0 || pool_size == 0) fail(ErrorCode::InvalidConfig, "label_shift sizes must be positive");
            break;
        case TaskKind::Custom:
            if (input.empty()) fail(ErrorCode::InvalidConfig, "custom task needs an input file");
            break;
    }
}

ExperimentSpec default_experiment_spec(TaskKind task, std::size_t seeds) {
    ExperimentSpec spec;
    spec.task = task;
    spec.seeds.resize(seeds);
    std::iota(spec.seeds.begin(), spec.seeds.end(), std::uint64_t{0});
    switch (task) {
        case TaskKind::Figure1:
            spec.methods = {make_method(MethodKind::EstSensAtSpec, ScorerMode::MonteCarlo, 0.9),
                            make_method(MethodKind::EstAuroc, ScorerMode::Deterministic),
                            make_method(MethodKind::JsDivergence)};
            spec.budgets = {0.3};
            spec.metrics = {MetricSpec::sens_at_spec(0.9), MetricSpec::auroc()};
            spec.binary = figure1_config(0);
            break;
        case TaskKind::AurocCorrelation:
            spec.methods = {make_method(MethodKind::EstAuroc, ScorerMode::Deterministic)};
            spec.budgets = {0.1};
            spec.mc.samples = 1000;
            break;
        case TaskKind::KappaConvergence:
            spec.methods = {make_method(MethodKind::EstKappa, ScorerMode::Deterministic)};
            spec.budgets = {0.1};
            spec.multiclass = kappa_convergence_config(0);
            spec.mc_replicates = 30;
            spec.metrics = {MetricSpec::weighted_kappa(PenaltyWeightMatrix::quadratic(4))};
            break;
        case TaskKind::LabelShift: {
            spec.methods = {make_method(MethodKind::EstSensAtSpec, ScorerMode::MonteCarlo, 0.99, false),
                            make_method(MethodKind::EstSensAtSpec, ScorerMode::MonteCarlo, 0.99, true),
                            make_method(MethodKind::JsDivergence, ScorerMode::Deterministic, 0.9, false),
                            make_method(MethodKind::JsDivergence, ScorerMode::Deterministic, 0.9, true)};
            spec.budgets = {0.15, 0.3};
            spec.metrics = {MetricSpec::sens_at_spec(0.99), MetricSpec::auroc()};
            BinarySimConfig cfg = figure1_config(0);
            cfg.positive_prior = 0.5;
            spec.binary = cfg;
            spec.test_priors = PriorEstimate({2.0 / 3.0, 1.0 / 3.0});
            break;
        }
        case TaskKind::Custom:
            spec.methods = {make_method(MethodKind::MaxClassProb)};
            spec.budgets = {0.1};
            spec.metrics = {MetricSpec::auroc()};
            break;
    }
    return spec;
}

MetricSpec metric_spec_from_json(const json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "auroc") return MetricSpec::auroc();
        constexpr std::string_view prefix = "sens_at_spec_";
        if (s.rfind(prefix, 0) == 0) {
            try {
                return MetricSpec::sens_at_spec(std::stod(s.substr(prefix.size())));
            } catch (const std::logic_error&) {
            }
        }
        fail(ErrorCode::SchemaError, "unknown metric '" + s + "'");
    }
    if (!j.is_object() || !j.contains("kind")) fail(ErrorCode::SchemaError, "metric needs a 'kind'");
    check_keys(j, {"kind", "target_specificity", "weights", "classes"}, "metric");
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "auroc") return MetricSpec::auroc();
    if (kind == "sens_at_spec") return MetricSpec::sens_at_spec(j.value("target_specificity", 0.9));
    if (kind != "weighted_kappa") fail(ErrorCode::SchemaError, "unknown metric kind '" + kind + "'");

    const json& w = j.contains("weights") ? j.at("weights") : json("quadratic");
    if (w.is_string()) {
        if (!j.contains("classes")) fail(ErrorCode::SchemaError, "named kappa weights need 'classes'");
        const auto c = j.at("classes").get<std::size_t>();
        const auto name = w.get<std::string>();
        if (name == "quadratic") return MetricSpec::weighted_kappa(PenaltyWeightMatrix::quadratic(c));
        if (name == "zero_one") return MetricSpec::weighted_kappa(PenaltyWeightMatrix::zero_one(c));
        fail(ErrorCode::SchemaError, "unknown kappa weights '" + name + "'");
    }
    if (!w.is_array() || w.empty()) fail(ErrorCode::SchemaError, "kappa weights must be a square matrix");
    const std::size_t c = w.size();
    std::vector<double> flat;
    for (const auto& row : w) {
        if (!row.is_array() || row.size() != c) fail(ErrorCode::SchemaError, "kappa weights must be a square matrix");
        for (const auto& v : row) flat.push_back(v.get<double>());
    }
    return MetricSpec::weighted_kappa(PenaltyWeightMatrix(c, std::move(flat)));
}

json metric_spec_to_json(const MetricSpec& m) {
    switch (m.kind) {
        case MetricKind::Auroc: return json{{"kind", "auroc"}};
        case MetricKind::SensAtSpec: return json{{"kind", "sens_at_spec"}, {"target_specificity", m.target_specificity}};
        case MetricKind::WeightedKappa: {
            json rows = json::array();
            const std::size_t c = m.weights.dimension();
            for (std::size_t i = 0; i < c; ++i) {
                json row = json::array();
                for (std::size_t k = 0; k < c; ++k) row.push_back(m.weights(i, k));
                rows.push_back(row);
            }
            return json{{"kind", "weighted_kappa"}, {"weights", rows}};
        }
    }
    return {};
}

ExperimentSpec experiment_spec_from_json(const json& j) {
    if (!j.is_object()) fail(ErrorCode::SchemaError, "experiment spec must be a JSON object");
    check_keys(j,
               {"task", "methods", "budgets", "seeds", "metrics", "output", "mc_samples", "smooth", "smooth_window",
                "smooth_polyorder", "simulation", "train_priors", "test_priors", "pool_size", "shifted_size",
                "em_tolerance", "em_max_iter", "mc_ladder", "mc_replicates", "input", "validation", "calibrate"},
               "experiment spec");
    if (!j.contains("task")) fail(ErrorCode::SchemaError, "experiment spec needs 'task'");
    try {
        const TaskKind task = parse_task(j.at("task").get<std::string>());
        ExperimentSpec spec = default_experiment_spec(task);

        if (j.contains("seeds")) {
            const json& s = j.at("seeds");
            if (s.is_number_integer()) {
                spec.seeds.assign(s.get<std::size_t>(), 0);
                std::iota(spec.seeds.begin(), spec.seeds.end(), std::uint64_t{0});
            } else {
                spec.seeds = s.get<std::vector<std::uint64_t>>();
            }
        }
        if (j.contains("budgets")) spec.budgets = j.at("budgets").get<std::vector<double>>();
        if (j.contains("output")) spec.output = j.at("output").get<std::string>();
        if (j.contains("mc_samples")) spec.mc.samples = j.at("mc_samples").get<std::size_t>();
        if (j.contains("smooth")) spec.mc.smooth = j.at("smooth").get<bool>();
        if (j.contains("smooth_window")) spec.mc.smooth_window = j.at("smooth_window").get<int>();
        if (j.contains("smooth_polyorder")) spec.mc.smooth_polyorder = j.at("smooth_polyorder").get<int>();
        if (j.contains("simulation")) {
            if (task == TaskKind::KappaConvergence) {
                spec.multiclass = multiclass_config_from_json(j.at("simulation"));
            } else {
                spec.binary = binary_config_from_json(j.at("simulation"));
            }
        }
        if (j.contains("train_priors")) spec.train_priors = PriorEstimate(j.at("train_priors").get<std::vector<double>>());
        if (j.contains("test_priors")) spec.test_priors = PriorEstimate(j.at("test_priors").get<std::vector<double>>());
        if (j.contains("pool_size")) spec.pool_size = j.at("pool_size").get<std::size_t>();
        if (j.contains("shifted_size")) spec.shifted_size = j.at("shifted_size").get<std::size_t>();
        if (j.contains("em_tolerance")) spec.em_tolerance = j.at("em_tolerance").get<double>();
        if (j.contains("em_max_iter")) spec.em_max_iter = j.at("em_max_iter").get<std::size_t>();
        if (j.contains("mc_ladder")) spec.mc_ladder = j.at("mc_ladder").get<std::vector<std::size_t>>();
        if (j.contains("mc_replicates")) spec.mc_replicates = j.at("mc_replicates").get<std::size_t>();
        if (j.contains("input")) spec.input = j.at("input").get<std::string>();
        if (j.contains("validation")) spec.validation = std::filesystem::path(j.at("validation").get<std::string>());
        if (j.contains("calibrate")) spec.calibrate = parse_calibrator_kind(j.at("calibrate").get<std::string>());
        if (j.contains("methods")) {
            spec.methods.clear();
            for (const auto& m : j.at("methods")) spec.methods.push_back(method_from_json(m));
        }
        if (j.contains("metrics")) {
            spec.metrics.clear();
            for (json m : j.at("metrics")) {
                // Named kappa weights take their size from the simulated
                // classes, or from the input header for custom runs.
                if (m.is_object() && m.value("kind", "") == "weighted_kappa" && !m.contains("classes")) {
                    if (spec.multiclass) {
                        m["classes"] = spec.multiclass->priors.size();
                    } else if (spec.task == TaskKind::Custom && !spec.input.empty()) {
                        m["classes"] = header_class_count(spec.input);
                    }
                }
                spec.metrics.push_back(metric_spec_from_json(m));
            }
        }
        spec.validate();
        return spec;
    } catch (const json::exception& e) {
        fail(ErrorCode::SchemaError, std::string("experiment spec: ") + e.what());
    }
}

json experiment_spec_to_json(const ExperimentSpec& spec) {
    json j;
    j["task"] = task_name(spec.task);
    j["methods"] = json::array();
    for (const auto& m : spec.methods) j["methods"].push_back(method_to_json(m));
    j["budgets"] = spec.budgets;
    j["seeds"] = spec.seeds;
    j["metrics"] = json::array();
    for (const auto& m : spec.metrics) j["metrics"].push_back(metric_spec_to_json(m));
    j["output"] = spec.output.string();
    j["mc_samples"] = spec.mc.samples;
    j["smooth"] = spec.mc.smooth;
    j["smooth_window"] = spec.mc.smooth_window;
    j["smooth_polyorder"] = spec.mc.smooth_polyorder;
    switch (spec.task) {
        case TaskKind::Figure1:
            j["simulation"] = to_json(*spec.binary);
            break;
        case TaskKind::AurocCorrelation:
            if (spec.binary) j["simulation"] = to_json(*spec.binary);
            break;
        case TaskKind::KappaConvergence:
            j["simulation"] = to_json(*spec.multiclass);
            j["mc_ladder"] = spec.mc_ladder;
            j["mc_replicates"] = spec.mc_replicates;
            break;
        case TaskKind::LabelShift:
            j["simulation"] = to_json(*spec.binary);
            j["test_priors"] = priors_json(spec.test_priors);
            j["pool_size"] = spec.pool_size;
            j["shifted_size"] = spec.shifted_size;
            j["em_tolerance"] = spec.em_tolerance;
            j["em_max_iter"] = spec.em_max_iter;
            break;
        case TaskKind::Custom:
            j["input"] = spec.input.string();
            if (spec.validation) j["validation"] = spec.validation->string();
            if (spec.calibrate) j["calibrate"] = calibrator_kind_name(*spec.calibrate);
            if (spec.train_priors.size() > 0) j["train_priors"] = priors_json(spec.train_priors);
            j["em_tolerance"] = spec.em_tolerance;
            j["em_max_iter"] = spec.em_max_iter;
            break;
    }
    return j;
}

std::size_t ResultTable::column(std::string_view name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) fail(ErrorCode::SchemaError, "results table has no column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
}

void ResultTable::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::InvalidArgument, "cannot write " + path.string());
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t k = 0; k < cells.size(); ++k) {
            if (k) out << ',';
            out << cells[k];
        }
        out << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
}

ResultTable ResultTable::read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::InputNotFound, "cannot open " + path.string());
    ResultTable t;
    std::string line;
    if (!std::getline(in, line)) fail(ErrorCode::SchemaError, path.string() + " is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    t.header = split_csv_line(line);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != t.header.size()) {
            fail(ErrorCode::SchemaError, path.string() + ":" + std::to_string(lineno) + ": expected " +
                                             std::to_string(t.header.size()) + " cells");
        }
        t.rows.push_back(std::move(cells));
    }
    return t;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    switch (spec.task) {
        case TaskKind::AurocCorrelation: return run_auroc_correlation(spec);
        case TaskKind::KappaConvergence: return run_kappa_convergence(spec);
        default: break;
    }

    ExperimentResult res;
    res.priors = priors_table_template();
    std::vector<GridRow> rows;
    std::vector<std::uint64_t> seeds = spec.seeds;
    std::sort(seeds.begin(), seeds.end());

    std::optional<Dataset> custom;
    if (spec.task == TaskKind::Custom) custom = custom_dataset(spec);

    for (auto seed : seeds) {
        if (spec.task == TaskKind::Custom) {
            run_grid(spec, seed, *custom, rows, res.priors);
            continue;
        }
        Dataset data = with_context("seed " + std::to_string(seed), [&] {
            if (spec.task == TaskKind::LabelShift) return label_shift_dataset(spec, seed);
            BinarySimConfig cfg = *spec.binary;
            cfg.seed = seed;
            return simulated_binary(cfg, needs_validation(spec), seed);
        });
        run_grid(spec, seed, data, rows, res.priors);
    }
    res.results = finish_grid(spec, std::move(rows));
    return res;
}

void write_experiment_outputs(const ExperimentSpec& spec, const ExperimentResult& result) {
    std::error_code ec;
    std::filesystem::create_directories(spec.output, ec);
    if (ec) fail(ErrorCode::InvalidArgument, "cannot create " + spec.output.string() + ": " + ec.message());
    json files = json::array({"results.csv"});
    result.results.write_csv(spec.output / "results.csv");
    if (!result.priors.rows.empty()) {
        result.priors.write_csv(spec.output / "priors.csv");
        files.push_back("priors.csv");
    }
    json manifest{{"version", kVersion},
                  {"created_at", iso_timestamp()},
                  {"spec", experiment_spec_to_json(spec)},
                  {"files", files},
                  {"rows", result.results.rows.size()}};
    write_json_file(spec.output / "manifest.json", manifest);
}

ComparisonResult compare_methods(const ResultTable& table, const std::string& value_column, double budget,
                                 double alpha) {
    const std::size_t c_seed = table.column("seed");
    const std::size_t c_method = table.column("method");
    const std::size_t c_budget = table.column("budget");
    const std::size_t c_value = table.column(value_column);
    const auto c_adapted = std::find(table.header.begin(), table.header.end(), "adapted");

    ComparisonResult cmp;
    cmp.alpha = alpha;
    std::map<std::pair<std::size_t, std::size_t>, double> cell;
    auto index_of = [](std::vector<std::string>& list, const std::string& key) {
        auto it = std::find(list.begin(), list.end(), key);
        if (it != list.end()) return static_cast<std::size_t>(it - list.begin());
        list.push_back(key);
        return list.size() - 1;
    };
    for (const auto& row : table.rows) {
        double b = 0.0;
        double v = 0.0;
        try {
            b = std::stod(row[c_budget]);
            v = std::stod(row[c_value]);
        } catch (const std::logic_error&) {
            fail(ErrorCode::SchemaError, "non-numeric budget or value cell in results table");
        }
        if (std::abs(b - budget) > 1e-12) continue;
        std::string method = row[c_method];
        if (c_adapted != table.header.end() && row[static_cast<std::size_t>(c_adapted - table.header.begin())] == "1") {
            method += "+adapted";
        }
        const std::size_t mi = index_of(cmp.methods, method);
        const std::size_t si = index_of(cmp.seeds, row[c_seed]);
        if (!cell.emplace(std::make_pair(mi, si), v).second) {
            fail(ErrorCode::SchemaError, "duplicate row for method " + method + ", seed " + row[c_seed]);
        }
    }
    if (cmp.methods.empty()) fail(ErrorCode::InvalidArgument, "no rows at budget " + format_double(budget));

    const std::size_t m = cmp.methods.size();
    const std::size_t s = cmp.seeds.size();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    cmp.values.assign(m, std::vector<double>(s, nan));
    for (const auto& [key, v] : cell) cmp.values[key.first][key.second] = v;

    cmp.p_values.assign(m, std::vector<double>(m, 1.0));
    cmp.significant.assign(m, std::vector<bool>(m, false));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (i == j) continue;
            std::vector<double> diffs;
            for (std::size_t k = 0; k < s; ++k) {
                if (cell.count({i, k}) && cell.count({j, k})) diffs.push_back(cmp.values[i][k] - cmp.values[j][k]);
            }
            try {
                cmp.p_values[i][j] = wilcoxon_signed_rank_one_sided(diffs).p_value;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::TooFewPairs) throw;
                cmp.p_values[i][j] = 1.0;
            }
            cmp.significant[i][j] = cmp.p_values[i][j] < alpha;
        }
    }
    return cmp;
}

json comparison_to_json(const ComparisonResult& cmp) {
    json values = json::object();
    for (std::size_t i = 0; i < cmp.methods.size(); ++i) {
        json per_seed = json::object();
        for (std::size_t k = 0; k < cmp.seeds.size(); ++k) {
            const double v = cmp.values[i][k];
            per_seed[cmp.seeds[k]] = std::isnan(v) ? json(nullptr) : json(v);
        }
        values[cmp.methods[i]] = per_seed;
    }
    json sig = json::array();
    for (const auto& row : cmp.significant) sig.push_back(std::vector<bool>(row.begin(), row.end()));
    return json{{"methods", cmp.methods}, {"seeds", cmp.seeds}, {"values", values},
                {"p_values", cmp.p_values}, {"significant", sig}, {"alpha", cmp.alpha}};
}

}  // namespace abstain
