#include "abstain/io.hpp"

#include <charconv>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "abstain/error.hpp"

namespace abstain {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& cell, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        fail(ErrorCode::SchemaError, "line " + std::to_string(line_no) + ": not a number: '" + cell + "'");
    }
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

bool PredictionTable::fully_labelled() const {
    for (const auto& y : labels) {
        if (!y) return false;
    }
    return true;
}

LabelVector PredictionTable::require_labels() const {
    LabelVector out(labels.size());
    for (std::size_t r = 0; r < labels.size(); ++r) {
        if (!labels[r]) fail(ErrorCode::SchemaError, "row " + ids[r] + " has no label");
        out[r] = *labels[r];
    }
    return out;
}

ProbabilityMatrix PredictionTable::probability_matrix() const {
    if (width() == 1) {
        std::vector<double> p(values.begin(), values.end());
        return ProbabilityMatrix::from_binary(p);
    }
    return ProbabilityMatrix(rows(), width(), values);
}

PredictionTable read_prediction_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::InputNotFound, "cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) fail(ErrorCode::SchemaError, path.string() + ": empty file");
    const auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "id" || header[1] != "label") {
        fail(ErrorCode::SchemaError, path.string() + ": header must start with id,label and have value columns");
    }

    PredictionTable t;
    t.value_columns.assign(header.begin() + 2, header.end());
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            fail(ErrorCode::SchemaError, path.string() + ": line " + std::to_string(line_no) + " has " +
                                             std::to_string(cells.size()) + " cells, expected " +
                                             std::to_string(header.size()));
        }
        t.ids.push_back(cells[0]);
        if (cells[1].empty()) {
            t.labels.emplace_back(std::nullopt);
        } else {
            const double y = parse_double(cells[1], line_no);
            if (y != static_cast<double>(static_cast<Label>(y)) || y < 0) {
                fail(ErrorCode::SchemaError, "line " + std::to_string(line_no) + ": label must be a nonnegative integer");
            }
            t.labels.emplace_back(static_cast<Label>(y));
        }
        for (std::size_t c = 2; c < cells.size(); ++c) t.values.push_back(parse_double(cells[c], line_no));
    }
    return t;
}

void write_prediction_csv(const std::filesystem::path& path, const PredictionTable& table) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::InputNotFound, "cannot write " + path.string());
    out << "id,label";
    for (const auto& c : table.value_columns) out << ',' << c;
    out << '\n';
    for (std::size_t r = 0; r < table.rows(); ++r) {
        out << table.ids[r] << ',';
        if (table.labels[r]) out << *table.labels[r];
        for (std::size_t c = 0; c < table.width(); ++c) out << ',' << format_double(table.value(r, c));
        out << '\n';
    }
}

PredictionTable make_probability_table(const ProbabilityMatrix& probs, const std::vector<std::optional<Label>>& labels,
                                       const std::vector<std::string>& ids) {
    if (labels.size() != probs.rows()) fail(ErrorCode::DimensionMismatch, "labels length differs from predictions");
    if (!ids.empty() && ids.size() != probs.rows()) fail(ErrorCode::DimensionMismatch, "ids length differs");
    PredictionTable t;
    t.labels = labels;
    t.ids.resize(probs.rows());
    for (std::size_t r = 0; r < probs.rows(); ++r) t.ids[r] = ids.empty() ? std::to_string(r) : ids[r];
    if (probs.class_count() == 2) {
        t.value_columns = {"prob"};
        t.values = probs.column(1);
    } else {
        for (std::size_t c = 0; c < probs.class_count(); ++c) t.value_columns.push_back("p_" + std::to_string(c));
        t.values.assign(probs.entries().begin(), probs.entries().end());
    }
    return t;
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::InputNotFound, "cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::SchemaError, path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::InputNotFound, "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace abstain
