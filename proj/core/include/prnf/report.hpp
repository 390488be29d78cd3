#pragma once

#include <string>
#include <utility>
#include <vector>

namespace prnf {

// Ordered sections of ordered key-value pairs: the text shape shared by
// reports and config echoes. Parsing is schema-free so a report can embed a
// full config echo and still round-trip.
struct Report {
    using Entries = std::vector<std::pair<std::string, std::string>>;
    std::vector<std::pair<std::string, Entries>> sections;

    void add(const std::string& section, const std::string& key, const std::string& value);
    void add_num(const std::string& section, const std::string& key, double value);
    // nullptr when absent; first match wins.
    const std::string* find(const std::string& section, const std::string& key) const;
    double num(const std::string& section, const std::string& key) const; // IoError on absence
};

std::string report_text(const Report& r);
Report parse_report(const std::string& text); // IoError on malformed lines
void save_report(const Report& r, const std::string& path);
Report load_report(const std::string& path);

// Plain CSV: one header row, comment lines starting with '#' skipped on load.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int col(const std::string& name) const;         // -1 when absent
    double num(long row, int col) const;            // IoError on junk
    std::vector<double> column(const std::string& name) const;
};

std::string csv_cell(double v); // shortest round-trip decimal text
void save_csv(const CsvTable& t, const std::string& path);
CsvTable load_csv(const std::string& path);

} // namespace prnf
