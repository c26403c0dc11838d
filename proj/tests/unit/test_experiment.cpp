#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "abstain/experiment.hpp"
#include "abstain/io.hpp"
#include "abstain/rng.hpp"
#include "abstain/selection.hpp"
#include "test_util.hpp"

using namespace abstain;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / "abstain_test_experiment" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentSpec small_figure1(std::size_t seeds) {
    auto spec = default_experiment_spec(TaskKind::Figure1, seeds);
    BinarySimConfig cfg = figure1_config(0);
    cfg.n = 2000;
    spec.binary = cfg;
    spec.mc.samples = 64;
    spec.budgets = {0.0, 0.1, 0.3};
    return spec;
}

}  // namespace

TEST_CASE("figure1 grid shape, ranges and zero budget") {
    auto spec = small_figure1(3);
    auto res = run_experiment(spec);
    const auto& t = res.results;
    CHECK(t.rows.size() == 3 * spec.methods.size() * 3);
    const auto budget = t.column("budget"), abst = t.column("abstained"), n = t.column("n");
    for (const auto& row : t.rows) {
        const double b = std::stod(row[budget]);
        CHECK(std::stoul(row[n]) == 2000);
        CHECK(std::stoul(row[abst]) <= budget_count(b, 2000));
        for (const auto& m : spec.metrics) {
            const double pre = std::stod(row[t.column("pre_" + m.name())]);
            const double post = std::stod(row[t.column("post_" + m.name())]);
            CHECK(pre >= 0.0);
            CHECK(post <= 1.0);
            if (b == 0.0) CHECK(post == pre);
        }
    }
    // Rows arrive in (seed, method, budget) order.
    CHECK(t.rows.front()[t.column("seed")] == "0");
    CHECK(t.rows.back()[t.column("seed")] == "2");
    CHECK_ERROR(t.column("nonexistent"), SchemaError);
}

TEST_CASE("reruns are byte-identical") {
    auto spec = small_figure1(2);
    spec.output = scratch("a");
    write_experiment_outputs(spec, run_experiment(spec));
    auto again = spec;
    again.output = scratch("b");
    write_experiment_outputs(again, run_experiment(again));
    CHECK(slurp(spec.output / "results.csv") == slurp(again.output / "results.csv"));
    auto manifest = read_json_file(spec.output / "manifest.json");
    CHECK(manifest.contains("created_at"));
    CHECK(manifest["rows"] == 2 * spec.methods.size() * 3);
    auto back = ResultTable::read_csv(spec.output / "results.csv");
    CHECK(back.header == run_experiment(spec).results.header);
}

TEST_CASE("label-shift task writes EM priors") {
    auto spec = default_experiment_spec(TaskKind::LabelShift, 2);
    spec.pool_size = 4000;
    spec.shifted_size = 2000;
    spec.mc.samples = 32;
    auto res = run_experiment(spec);
    REQUIRE(res.priors.rows.size() == 2 * 2);
    const auto em = res.priors.column("em_prior"), cls = res.priors.column("class");
    for (const auto& row : res.priors.rows) {
        if (row[cls] == "1") CHECK(std::abs(std::stod(row[em]) - 1.0 / 3.0) < 0.05);
    }
    const auto adapted = res.results.column("adapted");
    bool saw0 = false, saw1 = false;
    for (const auto& row : res.results.rows) (row[adapted] == "1" ? saw1 : saw0) = true;
    CHECK(saw0);
    CHECK(saw1);
}

TEST_CASE("auROC correlation and kappa convergence tasks") {
    auto spec = default_experiment_spec(TaskKind::AurocCorrelation, 3);
    spec.mc.samples = 50;
    auto res = run_experiment(spec);
    REQUIRE(res.results.rows.size() == 3);
    for (const auto& row : res.results.rows) {
        const double rho = std::stod(row[res.results.column("spearman")]);
        CHECK(rho >= -1.0);
        CHECK(rho <= 1.0);
    }

    auto k = default_experiment_spec(TaskKind::KappaConvergence, 1);
    MulticlassSimConfig cfg = kappa_convergence_config(0);
    cfg.n = 300;
    k.multiclass = cfg;
    k.mc_ladder = {4, 64};
    k.mc_replicates = 3;
    auto kr = run_experiment(k);
    REQUIRE(kr.results.rows.size() == 2);
    const auto diff = kr.results.column("mean_abs_diff");
    CHECK(std::stod(kr.results.rows[1][diff]) < std::stod(kr.results.rows[0][diff]));
}

TEST_CASE("custom task on CSV input") {
    const auto dir = scratch("custom");
    Rng rng(5);
    auto write = [&](const fs::path& p, std::size_t n) {
        std::ofstream out(p);
        out << "id,label,prob,variance\n";
        for (std::size_t i = 0; i < n; ++i) {
            const int y = rng.bernoulli(0.4) ? 1 : 0;
            const double x = rng.normal(y ? 1.0 : -1.0, 1.0);
            const double p = 1.0 / (1.0 + std::exp(-2.0 * x));
            out << "r" << i << "," << y << "," << format_double(p) << "," << format_double(p * (1 - p)) << "\n";
        }
    };
    write(dir / "test.csv", 400);
    write(dir / "val.csv", 400);
    json j = {{"task", "custom"},
              {"input", (dir / "test.csv").string()},
              {"validation", (dir / "val.csv").string()},
              {"seeds", 1},
              {"budgets", {0.1, 0.2}},
              {"metrics", {{{"kind", "auroc"}}}},
              {"methods",
               {{{"kind", "max_class_prob"}},
                {{"kind", "external_variance"}},
                {{"kind", "fumera"}},
                {{"kind", "js_divergence"}, {"adapt", true}},
                {{"kind", "est_auroc"}, {"mode", "deterministic"}}}}};
    auto spec = experiment_spec_from_json(j);
    auto res = run_experiment(spec);
    CHECK(res.results.rows.size() == 5 * 2);
    const auto abst = res.results.column("abstained"), budget = res.results.column("budget"),
               method = res.results.column("method");
    for (const auto& row : res.results.rows) {
        const auto cap = budget_count(std::stod(row[budget]), 400);
        if (row[method] == "fumera") CHECK(std::stoul(row[abst]) <= cap);
        else CHECK(std::stoul(row[abst]) == cap);
    }
    // Max-probability and variance priorities rank identically here.
    CHECK(res.results.rows[0][res.results.column("post_auroc")] == res.results.rows[2][res.results.column("post_auroc")]);
}

TEST_CASE("spec JSON round trip and schema errors") {
    auto spec = default_experiment_spec(TaskKind::LabelShift, 4);
    auto back = experiment_spec_from_json(experiment_spec_to_json(spec));
    CHECK(experiment_spec_to_json(back) == experiment_spec_to_json(spec));
    CHECK(experiment_spec_from_json(json{{"task", "figure1"}, {"seeds", {3, 5}}}).seeds ==
          std::vector<std::uint64_t>{3, 5});
    CHECK_ERROR(experiment_spec_from_json(json{{"task", "figure1"}, {"bogus", 1}}), SchemaError);
    CHECK_ERROR(experiment_spec_from_json(json{{"task", "nope"}}), SchemaError);
    CHECK_ERROR(experiment_spec_from_json(json{{"task", "figure1"}, {"methods", {{{"kind", "magic"}}}}}),
                SchemaError);
    CHECK_ERROR(experiment_spec_from_json(json{{"task", "figure1"}, {"budgets", {1.5}}}), InvalidConfig);
    auto m = metric_spec_from_json(json{{"kind", "sens_at_spec"}, {"target_specificity", 0.95}});
    CHECK(m.name() == "sens_at_spec_0.95");
    CHECK(metric_spec_from_json(metric_spec_to_json(m)).target_specificity == 0.95);
}

TEST_CASE("method comparison matrix") {
    auto spec = small_figure1(6);
    spec.budgets = {0.3};
    auto res = run_experiment(spec);
    auto cmp = compare_methods(res.results, "post_auroc", 0.3);
    const auto k = spec.methods.size();
    REQUIRE(cmp.methods.size() == k);
    CHECK(cmp.seeds.size() == 6);
    for (std::size_t i = 0; i < k; ++i) {
        CHECK(cmp.p_values[i][i] == 1.0);
        CHECK_FALSE(cmp.significant[i][i]);
        for (std::size_t j = 0; j < k; ++j) {
            CHECK(cmp.p_values[i][j] >= 0.0);
            CHECK(cmp.p_values[i][j] <= 1.0);
            CHECK(cmp.significant[i][j] == (cmp.p_values[i][j] < 0.05));
        }
    }
    auto j = comparison_to_json(cmp);
    CHECK(j["methods"].size() == k);
    CHECK_ERROR(compare_methods(res.results, "no_such_column", 0.3), SchemaError);
}

TEST_CASE("custom multiclass input sizes named kappa weights from its header") {
    const auto dir = scratch("custom_multi");
    {
        std::ofstream out(dir / "t.csv");
        out << "id,label,p_0,p_1,p_2\n";
        Rng rng(8);
        for (int i = 0; i < 60; ++i) {
            double a = rng.uniform() + 0.01, b = rng.uniform() + 0.01, c = rng.uniform() + 0.01;
            const double t = a + b + c;
            out << i << "," << (i % 3) << "," << format_double(a / t) << "," << format_double(b / t) << ","
                << format_double(1.0 - a / t - b / t) << "\n";
        }
    }
    json j = {{"task", "custom"},
              {"input", (dir / "t.csv").string()},
              {"seeds", 1},
              {"budgets", {0.1}},
              {"metrics", {{{"kind", "weighted_kappa"}, {"weights", "quadratic"}}}},
              {"methods", {{{"kind", "est_kappa"}, {"mode", "deterministic"}}, {{"kind", "entropy"}}}}};
    auto spec = experiment_spec_from_json(j);
    REQUIRE(spec.metrics.size() == 1);
    CHECK(spec.metrics[0].weights.dimension() == 3);
    CHECK(run_experiment(spec).results.rows.size() == 2);
}
