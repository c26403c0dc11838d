#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "abstain/io.hpp"
#include "test_util.hpp"

using namespace abstain;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / "abstain_test_io";
    fs::create_directories(dir);
    return dir / name;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("prediction CSV round trip") {
    auto P = ProbabilityMatrix::from_binary(std::vector<double>{0.1, 0.123456789012345678, 1.0 / 3.0});
    auto t = make_probability_table(P, {1, std::nullopt, 0}, {"a", "b", "c"});
    CHECK(t.value_columns == std::vector<std::string>{"prob"});
    CHECK_FALSE(t.fully_labelled());
    CHECK_ERROR(t.require_labels(), SchemaError);
    const auto path = scratch("round.csv");
    write_prediction_csv(path, t);
    auto back = read_prediction_csv(path);
    CHECK(back.ids == t.ids);
    CHECK(back.labels == t.labels);
    CHECK(back.values == t.values);
    CHECK(back.probability_matrix().entries()[5] == P.entries()[5]);

    ProbabilityMatrix M(2, 3, {0.2, 0.3, 0.5, 0.6, 0.3, 0.1});
    auto mt = make_probability_table(M, {2, 0});
    CHECK(mt.value_columns == std::vector<std::string>{"p_0", "p_1", "p_2"});
    CHECK(mt.ids == std::vector<std::string>{"0", "1"});
    write_prediction_csv(scratch("multi.csv"), mt);
    CHECK(read_prediction_csv(scratch("multi.csv")).probability_matrix().entries()[3] == 0.6);
}

TEST_CASE("doubles round trip through their decimal form") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0, 123456789.125}) {
        CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK(split_csv_line("a,,b") == std::vector<std::string>{"a", "", "b"});
}

TEST_CASE("malformed CSV input") {
    CHECK_ERROR(read_prediction_csv(scratch("missing_file.csv")), InputNotFound);
    write_text(scratch("empty.csv"), "");
    CHECK_ERROR(read_prediction_csv(scratch("empty.csv")), SchemaError);
    write_text(scratch("header.csv"), "label,id,prob\n1,a,0.3\n");
    CHECK_ERROR(read_prediction_csv(scratch("header.csv")), SchemaError);
    write_text(scratch("ragged.csv"), "id,label,prob\na,1,0.3,0.4\n");
    CHECK_ERROR(read_prediction_csv(scratch("ragged.csv")), SchemaError);
    write_text(scratch("nan.csv"), "id,label,prob\na,1,abc\n");
    CHECK_ERROR(read_prediction_csv(scratch("nan.csv")), SchemaError);
    write_text(scratch("neg.csv"), "id,label,prob\na,-1,0.3\n");
    CHECK_ERROR(read_prediction_csv(scratch("neg.csv")), SchemaError);
    write_text(scratch("rows.csv"), "id,label,p_0,p_1\na,0,0.3,0.3\n");
    CHECK_ERROR(read_prediction_csv(scratch("rows.csv")).probability_matrix(), InvalidArgument);
}

TEST_CASE("JSON files") {
    const auto path = scratch("x.json");
    write_json_file(path, nlohmann::json{{"k", 1}});
    CHECK(read_json_file(path)["k"] == 1);
    write_text(scratch("bad.json"), "{oops");
    CHECK_ERROR(read_json_file(scratch("bad.json")), SchemaError);
    CHECK_ERROR(read_json_file(scratch("nope.json")), InputNotFound);
}
