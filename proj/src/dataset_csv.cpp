#include "pfan/dataset_csv.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pfan/csv.hpp"
#include "pfan/errors.hpp"

namespace pfan {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_real(const std::string& cell, const std::string& path, int line_no) {
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str() || *end != '\0' || errno == ERANGE)
        throw DataError(path + ":" + std::to_string(line_no) + ": bad real value '" + cell + "'");
    return v;
}

int parse_int(const std::string& cell, const std::string& path, int line_no) {
    errno = 0;
    char* end = nullptr;
    long v = std::strtol(cell.c_str(), &end, 10);
    if (end == cell.c_str() || *end != '\0' || errno == ERANGE)
        throw DataError(path + ":" + std::to_string(line_no) + ": bad integer '" + cell + "'");
    return static_cast<int>(v);
}

std::vector<std::vector<std::string>> read_rows(const std::string& path, std::size_t min_cols) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells = split_line(line);
        if (cells.size() < min_cols)
            throw DataError(path + ":" + std::to_string(line_no) + ": expected at least " +
                            std::to_string(min_cols) + " columns, found " +
                            std::to_string(cells.size()));
        if (line_no == 1) continue;  // header
        rows.push_back(std::move(cells));
    }
    if (line_no == 0) throw DataError(path + ": empty file");
    return rows;
}

Matrix rows_to_matrix(const std::vector<std::vector<std::string>>& rows, int feature_cols,
                      const std::string& path) {
    if (rows.empty()) throw DataError(path + ": no data rows");
    Matrix out(static_cast<int>(rows.size()), feature_cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (static_cast<int>(rows[r].size()) < feature_cols)
            throw DataError(path + ": row " + std::to_string(r + 2) + " too short");
        for (int c = 0; c < feature_cols; ++c)
            out.at(static_cast<int>(r), c) =
                parse_real(rows[r][static_cast<std::size_t>(c)], path, static_cast<int>(r) + 2);
    }
    return out;
}

}  // namespace

void write_labeled_csv(const DomainDataset& data, const std::string& path) {
    if (!data.labels) throw DataError("write_labeled_csv needs labels");
    CsvWriter csv(path);
    std::vector<std::string> header;
    for (int c = 0; c < data.dim(); ++c) header.push_back("f" + std::to_string(c));
    header.emplace_back("label");
    csv.row(header);
    for (int r = 0; r < data.size(); ++r) {
        std::vector<std::string> cells;
        for (int c = 0; c < data.dim(); ++c) cells.push_back(format_real(data.features.at(r, c)));
        cells.push_back(std::to_string((*data.labels)[static_cast<std::size_t>(r)]));
        csv.row(cells);
    }
    csv.close();
}

void write_features_csv(const Matrix& features, const std::string& path) {
    CsvWriter csv(path);
    std::vector<std::string> header;
    for (int c = 0; c < features.cols; ++c) header.push_back("f" + std::to_string(c));
    csv.row(header);
    for (int r = 0; r < features.rows; ++r) {
        std::vector<std::string> cells;
        for (int c = 0; c < features.cols; ++c) cells.push_back(format_real(features.at(r, c)));
        csv.row(cells);
    }
    csv.close();
}

void write_truth_csv(const std::vector<int>& labels, const std::string& path) {
    CsvWriter csv(path);
    csv.row({"index", "label"});
    for (std::size_t i = 0; i < labels.size(); ++i)
        csv.row({std::to_string(i), std::to_string(labels[i])});
    csv.close();
}

DomainDataset load_labeled_csv(const std::string& path, int class_count, DomainTag tag) {
    std::vector<std::vector<std::string>> rows = read_rows(path, 2);
    int cols = static_cast<int>(rows.front().size());
    DomainDataset out;
    out.features = rows_to_matrix(rows, cols - 1, path);
    out.domain_tag = tag;
    out.class_count = class_count;
    std::vector<int> labels;
    labels.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        labels.push_back(parse_int(rows[r].back(), path, static_cast<int>(r) + 2));
    out.labels = std::move(labels);
    out.validate();
    return out;
}

Matrix load_features_csv(const std::string& path) {
    std::vector<std::vector<std::string>> rows = read_rows(path, 1);
    return rows_to_matrix(rows, static_cast<int>(rows.front().size()), path);
}

std::vector<int> load_truth_csv(const std::string& path) {
    std::vector<std::vector<std::string>> rows = read_rows(path, 2);
    std::vector<int> labels(rows.size(), 0);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        int idx = parse_int(rows[r][0], path, static_cast<int>(r) + 2);
        if (idx < 0 || idx >= static_cast<int>(rows.size()))
            throw DataError(path + ": index " + std::to_string(idx) + " out of range");
        labels[static_cast<std::size_t>(idx)] = parse_int(rows[r][1], path, static_cast<int>(r) + 2);
    }
    return labels;
}

}  // namespace pfan
