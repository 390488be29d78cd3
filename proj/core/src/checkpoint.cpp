#include "prnf/checkpoint.hpp"

#include "prnf/config.hpp"
#include "prnf/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>

namespace prnf {

namespace {

std::string fmt17(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    (void)ec;
    return std::string(buf, p);
}

void append_vector(std::string& out, const char* key, const std::vector<double>& v) {
    out += key;
    out += " =";
    for (double x : v) {
        out += ' ';
        out += fmt17(x);
    }
    out += '\n';
}

void append_matrix(std::string& out, const char* key, const Matrix& m) {
    out += key;
    out += " = " + std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
    for (int i = 0; i < m.rows(); ++i) {
        const double* row = m.row_ptr(i);
        for (int j = 0; j < m.cols(); ++j) {
            if (j) out += ' ';
            out += fmt17(row[j]);
        }
        out += '\n';
    }
}

void append_params(std::string& out, const char* section, const MlpParams& p) {
    out += section;
    out += '\n';
    append_matrix(out, "w1", p.w1);
    append_matrix(out, "b1", p.b1);
    append_matrix(out, "w2", p.w2);
    append_matrix(out, "b2", p.b2);
}

// Line cursor over the checkpoint body.
struct Lines {
    std::string_view text;
    std::size_t pos = 0;
    long line_no = 0;

    bool next(std::string& out) {
        if (pos >= text.size()) return false;
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        out.assign(text.substr(pos, eol - pos));
        if (!out.empty() && out.back() == '\r') out.pop_back();
        pos = eol + 1;
        ++line_no;
        return true;
    }

    [[noreturn]] void fail(const std::string& why) const {
        throw IoError("checkpoint line " + std::to_string(line_no) + ": " + why);
    }
};

double parse_double(const std::string& tok, Lines& in) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size())
        in.fail("expected a number, got '" + tok + "'");
    return v;
}

std::vector<std::string> tokens_of(const std::string& s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && s[i] == ' ') ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

// "key = rest" split; fails when '=' is absent.
std::pair<std::string, std::string> key_value(const std::string& line, Lines& in) {
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) in.fail("expected 'key = value', got '" + line + "'");
    auto trim = [](std::string_view v) {
        std::size_t b = 0, e = v.size();
        while (b < e && v[b] == ' ') ++b;
        while (e > b && v[e - 1] == ' ') --e;
        return std::string(v.substr(b, e - b));
    };
    return {trim(std::string_view(line).substr(0, eq)),
            trim(std::string_view(line).substr(eq + 1))};
}

std::vector<double> parse_vector_line(const std::string& line, const char* key, Lines& in) {
    auto [k, rest] = key_value(line, in);
    if (k != key) in.fail(std::string("expected '") + key + "', got '" + k + "'");
    std::vector<double> out;
    for (const std::string& tok : tokens_of(rest)) out.push_back(parse_double(tok, in));
    return out;
}

Matrix parse_matrix_block(Lines& in, const char* key) {
    std::string line;
    if (!in.next(line)) in.fail(std::string("missing matrix '") + key + "'");
    auto [k, dims] = key_value(line, in);
    if (k != key) in.fail(std::string("expected '") + key + "', got '" + k + "'");
    const std::vector<std::string> dt = tokens_of(dims);
    if (dt.size() != 2) in.fail("expected 'rows cols' after '" + k + "'");
    const long rows = static_cast<long>(parse_double(dt[0], in));
    const long cols = static_cast<long>(parse_double(dt[1], in));
    if (rows < 1 || cols < 1) in.fail("matrix dimensions must be positive");
    Matrix m(static_cast<int>(rows), static_cast<int>(cols));
    for (long i = 0; i < rows; ++i) {
        if (!in.next(line)) in.fail("truncated matrix '" + k + "'");
        const std::vector<std::string> row = tokens_of(line);
        if (static_cast<long>(row.size()) != cols)
            in.fail("matrix '" + k + "' row has " + std::to_string(row.size()) +
                    " entries, expected " + std::to_string(cols));
        double* dst = m.row_ptr(static_cast<int>(i));
        for (long j = 0; j < cols; ++j) dst[j] = parse_double(row[j], in);
    }
    return m;
}

MlpParams parse_params(Lines& in, int d, int s, const char* section) {
    std::string line;
    if (!in.next(line) || line != section)
        in.fail(std::string("expected section ") + section);
    MlpParams p;
    p.w1 = parse_matrix_block(in, "w1");
    p.b1 = parse_matrix_block(in, "b1");
    p.w2 = parse_matrix_block(in, "w2");
    p.b2 = parse_matrix_block(in, "b2");
    const int hidden = p.w1.rows();
    if (p.w1.cols() != d + s || p.b1.rows() != 1 || p.b1.cols() != hidden ||
        p.w2.rows() != s || p.w2.cols() != hidden || p.b2.rows() != 1 || p.b2.cols() != s)
        in.fail(std::string(section) + " shapes are inconsistent with d, s");
    p.spec.input_dim = d + s;
    p.spec.hidden_dim = hidden;
    p.spec.output_dim = s;
    return p;
}

long meta_long(const std::map<std::string, std::string>& meta, const char* key) {
    auto it = meta.find(key);
    if (it == meta.end()) throw IoError(std::string("checkpoint: missing meta key '") + key + "'");
    long v = 0;
    auto [p, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
    if (ec != std::errc() || p != it->second.data() + it->second.size())
        throw IoError(std::string("checkpoint: meta key '") + key + "' is not an integer");
    return v;
}

std::uint64_t meta_u64(const std::map<std::string, std::string>& meta, const char* key) {
    auto it = meta.find(key);
    if (it == meta.end()) throw IoError(std::string("checkpoint: missing meta key '") + key + "'");
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
    if (ec != std::errc() || p != it->second.data() + it->second.size())
        throw IoError(std::string("checkpoint: meta key '") + key + "' is not an unsigned integer");
    return v;
}

double meta_double(const std::map<std::string, std::string>& meta, const char* key) {
    auto it = meta.find(key);
    if (it == meta.end()) throw IoError(std::string("checkpoint: missing meta key '") + key + "'");
    double v = 0.0;
    auto [p, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
    if (ec != std::errc() || p != it->second.data() + it->second.size() || !std::isfinite(v))
        throw IoError(std::string("checkpoint: meta key '") + key + "' is not a finite number");
    return v;
}

const std::string& meta_str(const std::map<std::string, std::string>& meta, const char* key) {
    auto it = meta.find(key);
    if (it == meta.end()) throw IoError(std::string("checkpoint: missing meta key '") + key + "'");
    return it->second;
}

} // namespace

std::uint64_t fnv1a64(const char* bytes, std::size_t n) {
    std::uint64_t h = 14695981039346656037ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= static_cast<unsigned char>(bytes[i]);
        h *= 1099511628211ull;
    }
    return h;
}

std::string checkpoint_text(const Checkpoint& c) {
    const PrNfModel& m = c.model;
    std::string out;
    out += "[meta]\n";
    out += "format_version = " + std::to_string(c.format_version) + "\n";
    out += "d = " + std::to_string(m.d) + "\n";
    out += "s = " + std::to_string(m.s) + "\n";
    out += "direction = " + std::string(direction_name(m.direction)) + "\n";
    out += "hidden = " + std::to_string(m.theta_h.spec.hidden_dim) + "\n";
    out += "lambda = " + fmt17(m.lambda) + "\n";
    out += "epochs = " + std::to_string(c.train.epochs) + "\n";
    out += "batch = " + std::to_string(c.train.batch_size) + "\n";
    out += "learning_rate = " + fmt17(c.train.learning_rate) + "\n";
    out += "adam_beta1 = " + fmt17(c.train.adam_beta1) + "\n";
    out += "adam_beta2 = " + fmt17(c.train.adam_beta2) + "\n";
    out += "adam_eps = " + fmt17(c.train.adam_eps) + "\n";
    out += "train_seed = " + std::to_string(c.train.seed) + "\n";
    out += "data_seed = " + std::to_string(c.data_seed) + "\n";
    out += "singular = " + std::string(singularity_name(c.train.singularity)) + "\n";
    out += "[norm]\n";
    append_vector(out, "x_mean", m.norm.x_mean);
    append_vector(out, "x_std", m.norm.x_std);
    append_vector(out, "y_mean", m.norm.y_mean);
    append_vector(out, "y_std", m.norm.y_std);
    append_params(out, "[theta_h]", m.theta_h);
    append_params(out, "[theta_g]", m.theta_g);
    out += "[checksum]\n";
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(out.data(), out.size())));
    out += "fnv1a64 = ";
    out += hex;
    out += '\n';
    return out;
}

Checkpoint parse_checkpoint(const std::string& text) {
    // Checksum first: everything up to and including the "[checksum]\n" line
    // is covered; the final line carries the stored hash.
    const std::string marker = "[checksum]\n";
    const std::size_t mark = text.rfind(marker);
    if (mark == std::string::npos) throw IoError("checkpoint: missing [checksum] section");
    const std::size_t covered = mark + marker.size();
    std::string_view tail(text.data() + covered, text.size() - covered);
    if (tail.substr(0, 10) != std::string_view("fnv1a64 = "))
        throw IoError("checkpoint: malformed checksum line");
    tail.remove_prefix(10);
    while (!tail.empty() && (tail.back() == '\n' || tail.back() == '\r')) tail.remove_suffix(1);
    std::uint64_t stored = 0;
    auto [p, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), stored, 16);
    if (ec != std::errc() || p != tail.data() + tail.size() || tail.size() != 16)
        throw IoError("checkpoint: malformed checksum value");
    const std::uint64_t computed = fnv1a64(text.data(), covered);
    if (computed != stored) {
        char msg[128];
        std::snprintf(msg, sizeof(msg), "checkpoint checksum mismatch: stored %016llx, computed %016llx",
                      static_cast<unsigned long long>(stored),
                      static_cast<unsigned long long>(computed));
        throw ChecksumError(msg);
    }

    Lines in{std::string_view(text.data(), mark), 0, 0};
    std::string line;
    if (!in.next(line) || line != "[meta]") in.fail("expected [meta]");
    std::map<std::string, std::string> meta;
    while (in.next(line)) {
        if (line == "[norm]") break;
        auto [k, v] = key_value(line, in);
        if (!meta.emplace(k, v).second) in.fail("duplicate meta key '" + k + "'");
    }
    if (line != "[norm]") in.fail("expected [norm] after [meta]");

    Checkpoint c;
    c.format_version = static_cast<int>(meta_long(meta, "format_version"));
    if (c.format_version != 1)
        throw IoError("checkpoint: unsupported format_version " +
                      std::to_string(c.format_version));
    PrNfModel& m = c.model;
    m.d = static_cast<int>(meta_long(meta, "d"));
    m.s = static_cast<int>(meta_long(meta, "s"));
    if (m.d < 1 || m.s < 1) throw IoError("checkpoint: d and s must be positive");
    const std::string& dir = meta_str(meta, "direction");
    if (dir == "forward") m.direction = Direction::Forward;
    else if (dir == "inverse") m.direction = Direction::Inverse;
    else throw IoError("checkpoint: direction must be forward or inverse");
    const long hidden = meta_long(meta, "hidden");
    m.lambda = meta_double(meta, "lambda");
    c.train.lambda = m.lambda;
    c.train.hidden_dim = static_cast<int>(hidden);
    c.train.epochs = meta_long(meta, "epochs");
    c.train.batch_size = meta_long(meta, "batch");
    c.train.learning_rate = meta_double(meta, "learning_rate");
    c.train.adam_beta1 = meta_double(meta, "adam_beta1");
    c.train.adam_beta2 = meta_double(meta, "adam_beta2");
    c.train.adam_eps = meta_double(meta, "adam_eps");
    c.train.seed = meta_u64(meta, "train_seed");
    c.data_seed = meta_u64(meta, "data_seed");
    const std::string& sing = meta_str(meta, "singular");
    if (sing == "skip") c.train.singularity = Singularity::SkipSample;
    else if (sing == "abort") c.train.singularity = Singularity::Abort;
    else throw IoError("checkpoint: singular must be skip or abort");
    for (const auto& [k, v] : meta) {
        static const char* known[] = {"format_version", "d", "s", "direction", "hidden",
                                      "lambda", "epochs", "batch", "learning_rate",
                                      "adam_beta1", "adam_beta2", "adam_eps", "train_seed",
                                      "data_seed", "singular"};
        bool ok = false;
        for (const char* kk : known) ok = ok || (k == kk);
        if (!ok) throw IoError("checkpoint: unknown meta key '" + k + "'");
    }

    if (!in.next(line)) in.fail("truncated [norm]");
    m.norm.x_mean = parse_vector_line(line, "x_mean", in);
    if (!in.next(line)) in.fail("truncated [norm]");
    m.norm.x_std = parse_vector_line(line, "x_std", in);
    if (!in.next(line)) in.fail("truncated [norm]");
    m.norm.y_mean = parse_vector_line(line, "y_mean", in);
    if (!in.next(line)) in.fail("truncated [norm]");
    m.norm.y_std = parse_vector_line(line, "y_std", in);
    if (m.norm.d() != m.d || static_cast<int>(m.norm.x_std.size()) != m.d ||
        m.norm.s() != m.s || static_cast<int>(m.norm.y_std.size()) != m.s)
        in.fail("[norm] vector lengths are inconsistent with d, s");

    m.theta_h = parse_params(in, m.d, m.s, "[theta_h]");
    m.theta_g = parse_params(in, m.d, m.s, "[theta_g]");
    if (m.theta_h.spec.hidden_dim != hidden || m.theta_g.spec.hidden_dim != hidden)
        in.fail("theta hidden size disagrees with meta 'hidden'");
    if (in.next(line)) in.fail("unexpected trailing content '" + line + "'");
    return c;
}

void save_checkpoint(const Checkpoint& c, const std::string& path) {
    const std::string text = checkpoint_text(c);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw IoError("error writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("error reading checkpoint: " + path);
    return parse_checkpoint(buf.str());
}

} // namespace prnf
