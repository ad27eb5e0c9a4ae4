#pragma once

#include <string>
#include <vector>

namespace qrd {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

// Numbers are printed with six significant digits; parsing a printed value
// and printing it again reproduces the same text.
std::string csv_number(double value);
double csv_parse_number(const std::string& text);

void write_csv(const CsvTable& table, const std::string& path);
CsvTable read_csv(const std::string& path);

}  // namespace qrd
