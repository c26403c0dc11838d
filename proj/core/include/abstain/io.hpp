#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "abstain/types.hpp"

namespace abstain {

// CSV prediction table: header `id,label,<value columns...>`. Binary
// probability files use the single value column `prob`; multiclass files use
// `p_0..p_{C-1}`. Raw-score inputs for calibration use `score` or
// `z_0..z_{C-1}`. The label cell may be empty when labels are unknown.
struct PredictionTable {
    std::vector<std::string> ids;
    std::vector<std::optional<Label>> labels;
    std::vector<std::string> value_columns;
    std::vector<double> values;  // rows x value_columns, row-major

    std::size_t rows() const noexcept { return ids.size(); }
    std::size_t width() const noexcept { return value_columns.size(); }
    double value(std::size_t r, std::size_t c) const { return values[r * width() + c]; }

    bool fully_labelled() const;
    // Throws SchemaError when any label is missing.
    LabelVector require_labels() const;

    // One value column -> [1 - p, p]; otherwise the columns are the classes.
    ProbabilityMatrix probability_matrix() const;
};

PredictionTable read_prediction_csv(const std::filesystem::path& path);
void write_prediction_csv(const std::filesystem::path& path, const PredictionTable& table);

// Binary probabilities -> `id,label,prob`; multiclass -> `id,label,p_0,...`.
PredictionTable make_probability_table(const ProbabilityMatrix& probs, const std::vector<std::optional<Label>>& labels,
                                       const std::vector<std::string>& ids = {});

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

// Shortest round-trip decimal form of a double, used for every numeric CSV cell.
std::string format_double(double v);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace abstain
