#include "prnf/report.hpp"

#include "prnf/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

namespace prnf {

namespace {

std::string trim(std::string_view v) {
    std::size_t b = 0, e = v.size();
    while (b < e && (v[b] == ' ' || v[b] == '\t')) ++b;
    while (e > b && (v[e - 1] == ' ' || v[e - 1] == '\t' || v[e - 1] == '\r')) --e;
    return std::string(v.substr(b, e - b));
}

std::string slurp(const std::string& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(std::string("cannot open ") + what + ": " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError(std::string("error reading ") + what + ": " + path);
    return buf.str();
}

void spit(const std::string& text, const std::string& path, const char* what) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(std::string("cannot open ") + what + " for writing: " + path);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw IoError(std::string("error writing ") + what + ": " + path);
}

} // namespace

void Report::add(const std::string& section, const std::string& key,
                 const std::string& value) {
    for (auto& [name, entries] : sections)
        if (name == section) {
            entries.emplace_back(key, value);
            return;
        }
    sections.emplace_back(section, Entries{{key, value}});
}

void Report::add_num(const std::string& section, const std::string& key, double value) {
    add(section, key, csv_cell(value));
}

const std::string* Report::find(const std::string& section, const std::string& key) const {
    for (const auto& [name, entries] : sections)
        if (name == section)
            for (const auto& [k, v] : entries)
                if (k == key) return &v;
    return nullptr;
}

double Report::num(const std::string& section, const std::string& key) const {
    const std::string* v = find(section, key);
    if (!v) throw IoError("report: missing " + section + "." + key);
    double out = 0.0;
    auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || p != v->data() + v->size())
        throw IoError("report: " + section + "." + key + " is not a number: '" + *v + "'");
    return out;
}

std::string report_text(const Report& r) {
    std::string out;
    for (std::size_t i = 0; i < r.sections.size(); ++i) {
        if (i) out += '\n';
        out += "[" + r.sections[i].first + "]\n";
        for (const auto& [k, v] : r.sections[i].second) out += k + " = " + v + "\n";
    }
    return out;
}

Report parse_report(const std::string& text) {
    Report r;
    std::size_t pos = 0;
    long line_no = 0;
    std::string section;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        const std::string line = trim(std::string_view(text).substr(pos, eol - pos));
        pos = eol + 1;
        ++line_no;
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw IoError("report line " + std::to_string(line_no) +
                              ": malformed section header");
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            r.sections.emplace_back(section, Report::Entries{});
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos || section.empty())
            throw IoError("report line " + std::to_string(line_no) +
                          ": expected 'key = value' inside a [section]");
        r.sections.back().second.emplace_back(
            trim(std::string_view(line).substr(0, eq)),
            trim(std::string_view(line).substr(eq + 1)));
    }
    return r;
}

void save_report(const Report& r, const std::string& path) {
    spit(report_text(r), path, "report");
}

Report load_report(const std::string& path) { return parse_report(slurp(path, "report")); }

int CsvTable::col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

double CsvTable::num(long row, int c) const {
    if (row < 0 || row >= static_cast<long>(rows.size()) || c < 0 ||
        c >= static_cast<int>(rows[static_cast<std::size_t>(row)].size()))
        throw IoError("csv: cell out of range");
    const std::string& v = rows[static_cast<std::size_t>(row)][static_cast<std::size_t>(c)];
    double out = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw IoError("csv: not a number: '" + v + "'");
    return out;
}

std::vector<double> CsvTable::column(const std::string& name) const {
    const int c = col(name);
    if (c < 0) throw IoError("csv: missing column '" + name + "'");
    std::vector<double> out;
    out.reserve(rows.size());
    for (long i = 0; i < static_cast<long>(rows.size()); ++i) out.push_back(num(i, c));
    return out;
}

std::string csv_cell(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

void save_csv(const CsvTable& t, const std::string& path) {
    std::string out;
    for (std::size_t i = 0; i < t.header.size(); ++i) {
        if (i) out += ',';
        out += t.header[i];
    }
    out += '\n';
    for (const auto& row : t.rows) {
        if (row.size() != t.header.size()) throw ShapeError("save_csv: ragged row");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += row[i];
        }
        out += '\n';
    }
    spit(out, path, "csv");
}

CsvTable load_csv(const std::string& path) {
    const std::string text = slurp(path, "csv");
    CsvTable t;
    std::size_t pos = 0;
    bool have_header = false;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string line = trim(std::string_view(text).substr(pos, eol - pos));
        pos = eol + 1;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            std::size_t comma = line.find(',', start);
            cells.push_back(trim(std::string_view(line).substr(
                start, comma == std::string::npos ? std::string::npos : comma - start)));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (!have_header) {
            t.header = std::move(cells);
            have_header = true;
        } else {
            if (cells.size() != t.header.size())
                throw IoError("csv " + path + ": row with " + std::to_string(cells.size()) +
                              " cells, expected " + std::to_string(t.header.size()));
            t.rows.push_back(std::move(cells));
        }
    }
    if (!have_header) throw IoError("csv " + path + ": empty file");
    return t;
}

} // namespace prnf
