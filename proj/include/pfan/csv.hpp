#ifndef PFAN_CSV_HPP
#define PFAN_CSV_HPP

#include <fstream>
#include <string>
#include <vector>

namespace pfan {

// Shortest round-trippable decimal form of a 64-bit real ("%.17g"), so CSVs
// are reproducible byte-for-byte and parse back to the identical value.
std::string format_real(double v);

// format_real, or the empty string for NaN ("value absent" in our CSVs).
std::string format_real_or_empty(double v);

// One CSV file being written: comma-joined rows, LF line endings, UTF-8.
class CsvWriter {
public:
    explicit CsvWriter(const std::string& path);

    void row(const std::vector<std::string>& cells);
    void close();  // flush and fail loudly on a short write

private:
    std::ofstream out_;
    std::string path_;
};

}  // namespace pfan

#endif
