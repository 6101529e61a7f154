#include "pfan/csv.hpp"

#include <cmath>
#include <cstdio>

#include "pfan/errors.hpp"

namespace pfan {

std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_real_or_empty(double v) { return std::isnan(v) ? std::string() : format_real(v); }

CsvWriter::CsvWriter(const std::string& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw DataError("cannot open for writing: " + path);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
}

void CsvWriter::close() {
    out_.flush();
    if (!out_) throw DataError("write failed: " + path_);
    out_.close();
}

}  // namespace pfan
