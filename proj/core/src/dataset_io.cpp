#include "prnf/dataset_io.hpp"

#include "prnf/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>

namespace prnf {

namespace {

constexpr const char* kHeader = "# prnf-dataset v1";

std::string fmt(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

std::string trim(std::string_view v) {
    std::size_t b = 0, e = v.size();
    while (b < e && (v[b] == ' ' || v[b] == '\t')) ++b;
    while (e > b && (v[e - 1] == ' ' || v[e - 1] == '\t' || v[e - 1] == '\r')) --e;
    return std::string(v.substr(b, e - b));
}

long require_long(const std::map<std::string, std::string>& prov, const char* key,
                  const std::string& path) {
    auto it = prov.find(key);
    if (it == prov.end())
        throw IoError("dataset " + path + ": missing provenance key '" + key + "'");
    long v = 0;
    auto [p, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
    if (ec != std::errc() || p != it->second.data() + it->second.size() || v < 1)
        throw IoError("dataset " + path + ": provenance key '" + key +
                      "' must be a positive integer");
    return v;
}

} // namespace

void save_dataset(const Dataset& data, const std::string& path) {
    if (data.cond.rows() != data.target.rows())
        throw ShapeError("save_dataset: row count mismatch");
    std::map<std::string, std::string> prov = data.provenance;
    prov["d"] = std::to_string(data.cond.cols());
    prov["s"] = std::to_string(data.target.cols());
    prov["direction"] = data.direction == Direction::Forward ? "forward" : "inverse";

    std::string out;
    out += kHeader;
    out += '\n';
    for (const auto& [k, v] : prov) out += "# " + k + " = " + v + "\n";
    for (int i = 0; i < data.cond.rows(); ++i) {
        const double* c = data.cond.row_ptr(i);
        const double* t = data.target.row_ptr(i);
        for (int j = 0; j < data.cond.cols(); ++j) {
            if (j) out += ',';
            out += fmt(c[j]);
        }
        for (int j = 0; j < data.target.cols(); ++j) {
            out += ',';
            out += fmt(t[j]);
        }
        out += '\n';
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open dataset for writing: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    f.flush();
    if (!f) throw IoError("error writing dataset: " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open dataset: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    if (f.bad()) throw IoError("error reading dataset: " + path);
    const std::string text = buf.str();

    std::size_t pos = 0;
    std::size_t line_start = 0;
    long line_no = 0;
    auto next_line = [&](std::string& out) {
        if (pos >= text.size()) return false;
        line_start = pos;
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        out.assign(text, pos, eol - pos);
        if (!out.empty() && out.back() == '\r') out.pop_back();
        pos = eol + 1;
        ++line_no;
        return true;
    };

    std::string line;
    if (!next_line(line) || line != kHeader)
        throw IoError("dataset " + path + ": first line must be '" + kHeader + "'");

    Dataset data;
    // Provenance block, then data rows. Row positions are remembered so the
    // matrix pass can size storage up front.
    std::vector<std::pair<std::size_t, long>> row_starts;
    while (next_line(line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw IoError("dataset " + path + " line " + std::to_string(line_no) +
                              ": provenance line lacks '='");
            data.provenance[trim(std::string_view(line).substr(1, eq - 1))] =
                trim(std::string_view(line).substr(eq + 1));
            continue;
        }
        row_starts.emplace_back(line_start, line_no);
    }
    if (row_starts.empty()) throw IoError("dataset " + path + ": no data rows");

    const long d = require_long(data.provenance, "d", path);
    const long s = require_long(data.provenance, "s", path);
    auto dir = data.provenance.find("direction");
    if (dir != data.provenance.end() && dir->second == "inverse")
        data.direction = Direction::Inverse;

    const long n = static_cast<long>(row_starts.size());
    data.cond = Matrix(static_cast<int>(n), static_cast<int>(d));
    data.target = Matrix(static_cast<int>(n), static_cast<int>(s));
    for (long i = 0; i < n; ++i) {
        const char* c = text.data() + row_starts[static_cast<std::size_t>(i)].first;
        const char* end = text.data() + text.size();
        double* cr = data.cond.row_ptr(static_cast<int>(i));
        double* tr = data.target.row_ptr(static_cast<int>(i));
        for (long j = 0; j < d + s; ++j) {
            double v = 0.0;
            auto [p, ec] = std::from_chars(c, end, v);
            if (ec != std::errc() || !std::isfinite(v))
                throw IoError("dataset " + path + " line " +
                              std::to_string(row_starts[static_cast<std::size_t>(i)].second) +
                              ": bad number in column " + std::to_string(j + 1));
            if (j < d) cr[j] = v;
            else tr[j - d] = v;
            c = p;
            if (j + 1 < d + s) {
                if (c >= end || *c != ',')
                    throw IoError("dataset " + path + " line " +
                                  std::to_string(row_starts[static_cast<std::size_t>(i)].second) +
                                  ": expected " + std::to_string(d + s) + " columns");
                ++c;
            }
        }
        if (c < end && *c != '\n' && *c != '\r')
            throw IoError("dataset " + path + " line " +
                          std::to_string(row_starts[static_cast<std::size_t>(i)].second) +
                          ": trailing junk after " + std::to_string(d + s) + " columns");
    }
    return data;
}

} // namespace prnf
