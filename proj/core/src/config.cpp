#include "prnf/config.hpp"

#include "prnf/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
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

[[noreturn]] void bad_value(const std::string& where, const std::string& value,
                            const char* expected) {
    throw ConfigError("bad value for " + where + ": '" + value + "' is not " + expected);
}

long to_long(const std::string& v, const std::string& where) {
    long out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) bad_value(where, v, "an integer");
    return out;
}

std::uint64_t to_u64(const std::string& v, const std::string& where) {
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        bad_value(where, v, "a non-negative integer");
    return out;
}

double to_double(const std::string& v, const std::string& where) {
    double out = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out))
        bad_value(where, v, "a finite number");
    return out;
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = v.find(',', start);
        out.push_back(trim(std::string_view(v).substr(
            start, comma == std::string::npos ? std::string::npos : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::vector<double> to_double_list(const std::string& v, const std::string& where) {
    std::vector<double> out;
    for (const std::string& tok : split_list(v)) out.push_back(to_double(tok, where));
    return out;
}

std::vector<long> to_long_list(const std::string& v, const std::string& where) {
    std::vector<long> out;
    for (const std::string& tok : split_list(v)) out.push_back(to_long(tok, where));
    return out;
}

ProblemKind to_kind(const std::string& v, const std::string& where) {
    if (v == "sin") return ProblemKind::Sin;
    if (v == "quadratic") return ProblemKind::Quadratic;
    if (v == "hd") return ProblemKind::Hd;
    bad_value(where, v, "one of sin, quadratic, hd");
}

Direction to_direction(const std::string& v, const std::string& where) {
    if (v == "forward") return Direction::Forward;
    if (v == "inverse") return Direction::Inverse;
    bad_value(where, v, "one of forward, inverse");
}

NoiseFamily to_noise(const std::string& v, const std::string& where) {
    if (v == "gaussian") return NoiseFamily::Gaussian;
    if (v == "laplace") return NoiseFamily::Laplace;
    if (v == "mixture") return NoiseFamily::GaussianMixture2;
    if (v == "correlated") return NoiseFamily::CorrelatedGaussian;
    bad_value(where, v, "one of gaussian, laplace, mixture, correlated");
}

ScaleMode to_scale_mode(const std::string& v, const std::string& where) {
    if (v == "homoscedastic") return ScaleMode::Homoscedastic;
    if (v == "heteroscedastic") return ScaleMode::Heteroscedastic;
    bad_value(where, v, "one of homoscedastic, heteroscedastic");
}

Singularity to_singularity(const std::string& v, const std::string& where) {
    if (v == "skip") return Singularity::SkipSample;
    if (v == "abort") return Singularity::Abort;
    bad_value(where, v, "one of skip, abort");
}

using Setter = std::function<void(ExperimentConfig&, const std::string& value,
                                  const std::string& where)>;

struct FieldDef {
    const char* section;
    const char* key;
    Setter set;
};

const std::vector<FieldDef>& schema() {
    static const std::vector<FieldDef> defs = {
        {"problem", "kind",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.kind = to_kind(v, w);
         }},
        {"problem", "direction",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.direction = to_direction(v, w);
         }},
        {"problem", "d",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.d = static_cast<int>(to_long(v, w));
         }},
        {"problem", "s",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.s = static_cast<int>(to_long(v, w));
         }},
        {"problem", "noise",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.noise = to_noise(v, w);
         }},
        {"problem", "noise_mode",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.noise_mode = to_scale_mode(v, w);
         }},
        {"problem", "noise_scale",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.noise_scale = to_double(v, w);
         }},
        {"problem", "noise_var",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.noise_var = to_double(v, w);
         }},
        {"problem", "mix_mean",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.mix_mean = to_double(v, w);
         }},
        {"problem", "sigma_seed",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.sigma_seed = to_u64(v, w);
         }},
        {"problem", "a_seed",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.a_seed = to_u64(v, w);
         }},
        {"data", "n_train",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.n_train = to_long(v, w);
         }},
        {"data", "seed",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.data_seed = to_u64(v, w);
         }},
        {"train", "epochs",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.train.epochs = to_long(v, w);
         }},
        {"train", "batch",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.train.batch_size = to_long(v, w);
         }},
        {"train", "hidden",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.train.hidden_dim = static_cast<int>(to_long(v, w));
         }},
        {"train", "lambda",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.train.lambda = to_double(v, w);
         }},
        {"train", "learning_rate",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.train.learning_rate = to_double(v, w);
         }},
        {"train", "adam_beta1",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.train.adam_beta1 = to_double(v, w);
         }},
        {"train", "adam_beta2",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.train.adam_beta2 = to_double(v, w);
         }},
        {"train", "adam_eps",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.train.adam_eps = to_double(v, w);
         }},
        {"train", "seed",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.train.seed = to_u64(v, w);
         }},
        {"train", "singular",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.train.singularity = to_singularity(v, w);
         }},
        {"train", "threads",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.train.threads = static_cast<int>(to_long(v, w));
         }},
        {"tune", "lambda_grid",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.lambda_grid = to_double_list(v, w);
         }},
        {"tune", "m_samples",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.tune_samples = to_long(v, w);
         }},
        {"eval", "n_test",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.n_test = to_long(v, w);
         }},
        {"eval", "n_samples",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.n_samples = to_long(v, w);
         }},
        {"eval", "seed",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.eval_seed = to_u64(v, w);
         }},
        {"eval", "grid_points",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.grid_points = to_long(v, w);
         }},
        {"eval", "x_points",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.eval_x = to_double_list(v, w);
         }},
        {"eval", "y_points",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.eval_y = to_double_list(v, w);
         }},
        {"sweep", "lambda_grid",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.sweep_lambda = to_double_list(v, w);
         }},
        {"sweep", "hidden_grid",
         [](ExperimentConfig& c, const std::string& v, const std::string& w) {
             c.sweep_hidden = to_long_list(v, w);
         }},
        {"output", "dir",
         [](ExperimentConfig& c, const std::string& v, const std::string&) {
             c.out_dir = v;
         }},
    };
    return defs;
}

const FieldDef* find_field(const std::string& section, const std::string& key) {
    for (const FieldDef& f : schema())
        if (section == f.section && key == f.key) return &f;
    return nullptr;
}

bool known_section(const std::string& section) {
    for (const FieldDef& f : schema())
        if (section == f.section) return true;
    return false;
}

// Shortest decimal text that parses back to the same double.
std::string fmt(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

std::string fmt_list(const std::vector<double>& vs) {
    std::string out;
    for (std::size_t i = 0; i < vs.size(); ++i) {
        if (i) out += ',';
        out += fmt(vs[i]);
    }
    return out;
}

std::string fmt_list(const std::vector<long>& vs) {
    std::string out;
    for (std::size_t i = 0; i < vs.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(vs[i]);
    }
    return out;
}

void require(bool ok, const std::string& field, const std::string& why) {
    if (!ok) throw ConfigError(field + ": " + why);
}

} // namespace

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    std::set<std::string> seen;
    std::string section;
    std::size_t pos = 0;
    long line_no = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        const std::string line = trim(std::string_view(text).substr(pos, eol - pos));
        pos = eol + 1;
        ++line_no;
        const std::string at = " (line " + std::to_string(line_no) + ")";
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("malformed section header" + at + ": " + line);
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            if (!known_section(section))
                throw ConfigError("unknown section '" + section + "'" + at);
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected 'key = value'" + at + ": " + line);
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (section.empty())
            throw ConfigError("key '" + key + "' appears before any [section]" + at);
        if (key.empty()) throw ConfigError("empty key" + at);
        const std::string qualified = section + "." + key;
        const FieldDef* field = find_field(section, key);
        if (!field) throw ConfigError("unknown key '" + qualified + "'" + at);
        if (!seen.insert(qualified).second)
            throw ConfigError("duplicate key '" + qualified + "'" + at);
        field->set(cfg, value, qualified + at);
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("error reading config file: " + path);
    return parse_config(buf.str());
}

void resolve_defaults(ExperimentConfig& cfg) {
    const bool hd = cfg.kind == ProblemKind::Hd;
    if (hd) {
        require(cfg.d >= 1, "problem.d", "must be >= 1");
        require(cfg.s >= 1, "problem.s", "must be >= 1");
        require(cfg.noise != NoiseFamily::Laplace, "problem.noise",
                "laplace noise is defined for 1-D problems only");
        require(cfg.noise_mode == ScaleMode::Homoscedastic, "problem.noise_mode",
                "heteroscedastic noise is defined for 1-D problems only");
        require(cfg.noise_var > 0.0, "problem.noise_var", "must be > 0");
    } else {
        require(cfg.noise == NoiseFamily::Gaussian || cfg.noise == NoiseFamily::Laplace,
                "problem.noise", "1-D problems take gaussian or laplace noise");
        if (cfg.noise_scale < 0.0) {
            const bool hetero = cfg.noise_mode == ScaleMode::Heteroscedastic;
            cfg.noise_scale = cfg.noise == NoiseFamily::Gaussian ? (hetero ? 0.2 : 0.15)
                                                                 : (hetero ? 0.15 : 0.1);
        }
        require(cfg.noise_scale > 0.0, "problem.noise_scale", "must be > 0");
    }
    if (cfg.n_train == 0) cfg.n_train = hd ? 30000 : 20000;
    require(cfg.n_train >= 1, "data.n_train", "must be >= 1");
    require(cfg.train.epochs >= 1, "train.epochs", "must be >= 1");
    require(cfg.train.batch_size >= 0, "train.batch", "must be >= 0 (0 = full batch)");
    require(cfg.train.hidden_dim >= 1, "train.hidden", "must be >= 1");
    require(cfg.train.lambda >= 0.0, "train.lambda", "must be >= 0");
    require(cfg.train.learning_rate > 0.0, "train.learning_rate", "must be > 0");
    require(cfg.train.adam_beta1 >= 0.0 && cfg.train.adam_beta1 < 1.0, "train.adam_beta1",
            "must lie in [0, 1)");
    require(cfg.train.adam_beta2 >= 0.0 && cfg.train.adam_beta2 < 1.0, "train.adam_beta2",
            "must lie in [0, 1)");
    require(cfg.train.adam_eps > 0.0, "train.adam_eps", "must be > 0");
    require(cfg.train.threads >= 0, "train.threads", "must be >= 0 (0 = hardware)");
    require(!cfg.lambda_grid.empty(), "tune.lambda_grid", "must not be empty");
    for (double l : cfg.lambda_grid)
        require(l >= 0.0, "tune.lambda_grid", "entries must be >= 0");
    require(cfg.tune_samples >= 2, "tune.m_samples", "must be >= 2");
    require(cfg.n_test >= 1, "eval.n_test", "must be >= 1");
    require(cfg.n_samples >= 2, "eval.n_samples", "must be >= 2");
    require(cfg.grid_points >= 2, "eval.grid_points", "must be >= 2");
    if (cfg.eval_x.empty())
        for (int i = 0; i <= 60; ++i) cfg.eval_x.push_back(-1.0 + 0.05 * i);
    if (cfg.eval_y.empty()) cfg.eval_y = {-0.5, 0.0, 0.5};
    require(!cfg.sweep_lambda.empty(), "sweep.lambda_grid", "must not be empty");
    for (double l : cfg.sweep_lambda)
        require(l >= 0.0, "sweep.lambda_grid", "entries must be >= 0");
    require(!cfg.sweep_hidden.empty(), "sweep.hidden_grid", "must not be empty");
    for (long h : cfg.sweep_hidden)
        require(h >= 1, "sweep.hidden_grid", "entries must be >= 1");
}

Problem1D problem_1d(const ExperimentConfig& cfg) {
    if (cfg.kind == ProblemKind::Hd) throw Error("problem_1d: config has the hd kind");
    Problem1D p;
    p.function = cfg.kind == ProblemKind::Sin ? Func1D::Sin : Func1D::Quadratic;
    p.noise = cfg.noise == NoiseFamily::Gaussian
                  ? noise_gaussian(cfg.noise_scale, cfg.noise_mode)
                  : noise_laplace(cfg.noise_scale, cfg.noise_mode);
    return p;
}

ProblemHD problem_hd(const ExperimentConfig& cfg) {
    if (cfg.kind != ProblemKind::Hd) throw Error("problem_hd: config has a 1-D kind");
    NoiseSpec noise;
    switch (cfg.noise) {
    case NoiseFamily::Gaussian:
        noise = noise_gaussian(std::sqrt(cfg.noise_var), ScaleMode::Homoscedastic, cfg.s);
        break;
    case NoiseFamily::GaussianMixture2:
        noise = noise_mixture2(cfg.s, cfg.mix_mean, cfg.noise_var);
        break;
    case NoiseFamily::CorrelatedGaussian:
        noise = noise_correlated_seeded(cfg.s, cfg.sigma_seed);
        break;
    case NoiseFamily::Laplace:
        throw ConfigError("problem.noise: laplace noise is defined for 1-D problems only");
    }
    return make_problem_hd(cfg.d, cfg.s, cfg.a_seed, std::move(noise));
}

Dataset generate_dataset(const ExperimentConfig& cfg) {
    if (cfg.kind == ProblemKind::Hd)
        return gen_hd(problem_hd(cfg), cfg.n_train, cfg.data_seed);
    return gen_1d(problem_1d(cfg), cfg.n_train, cfg.data_seed);
}

std::string config_echo(const ExperimentConfig& cfg) {
    std::string o;
    o += "[problem]\n";
    o += "kind = " + std::string(problem_kind_name(cfg.kind)) + "\n";
    o += "direction = " + std::string(direction_name(cfg.direction)) + "\n";
    o += "d = " + std::to_string(cfg.d) + "\n";
    o += "s = " + std::to_string(cfg.s) + "\n";
    o += "noise = " + std::string(noise_family_name(cfg.noise)) + "\n";
    o += "noise_mode = " + std::string(scale_mode_name(cfg.noise_mode)) + "\n";
    o += "noise_scale = " + fmt(cfg.noise_scale) + "\n";
    o += "noise_var = " + fmt(cfg.noise_var) + "\n";
    o += "mix_mean = " + fmt(cfg.mix_mean) + "\n";
    o += "sigma_seed = " + std::to_string(cfg.sigma_seed) + "\n";
    o += "a_seed = " + std::to_string(cfg.a_seed) + "\n";
    o += "\n[data]\n";
    o += "n_train = " + std::to_string(cfg.n_train) + "\n";
    o += "seed = " + std::to_string(cfg.data_seed) + "\n";
    o += "\n[train]\n";
    o += "epochs = " + std::to_string(cfg.train.epochs) + "\n";
    o += "batch = " + std::to_string(cfg.train.batch_size) + "\n";
    o += "hidden = " + std::to_string(cfg.train.hidden_dim) + "\n";
    o += "lambda = " + fmt(cfg.train.lambda) + "\n";
    o += "learning_rate = " + fmt(cfg.train.learning_rate) + "\n";
    o += "adam_beta1 = " + fmt(cfg.train.adam_beta1) + "\n";
    o += "adam_beta2 = " + fmt(cfg.train.adam_beta2) + "\n";
    o += "adam_eps = " + fmt(cfg.train.adam_eps) + "\n";
    o += "seed = " + std::to_string(cfg.train.seed) + "\n";
    o += "singular = " + std::string(singularity_name(cfg.train.singularity)) + "\n";
    o += "threads = " + std::to_string(cfg.train.threads) + "\n";
    o += "\n[tune]\n";
    o += "lambda_grid = " + fmt_list(cfg.lambda_grid) + "\n";
    o += "m_samples = " + std::to_string(cfg.tune_samples) + "\n";
    o += "\n[eval]\n";
    o += "n_test = " + std::to_string(cfg.n_test) + "\n";
    o += "n_samples = " + std::to_string(cfg.n_samples) + "\n";
    o += "seed = " + std::to_string(cfg.eval_seed) + "\n";
    o += "grid_points = " + std::to_string(cfg.grid_points) + "\n";
    o += "x_points = " + fmt_list(cfg.eval_x) + "\n";
    o += "y_points = " + fmt_list(cfg.eval_y) + "\n";
    o += "\n[sweep]\n";
    o += "lambda_grid = " + fmt_list(cfg.sweep_lambda) + "\n";
    o += "hidden_grid = " + fmt_list(cfg.sweep_hidden) + "\n";
    o += "\n[output]\n";
    o += "dir = " + cfg.out_dir + "\n";
    return o;
}

const char* problem_kind_name(ProblemKind k) {
    switch (k) {
    case ProblemKind::Sin: return "sin";
    case ProblemKind::Quadratic: return "quadratic";
    case ProblemKind::Hd: return "hd";
    }
    return "?";
}

const char* direction_name(Direction d) {
    return d == Direction::Forward ? "forward" : "inverse";
}

const char* noise_family_name(NoiseFamily f) {
    switch (f) {
    case NoiseFamily::Gaussian: return "gaussian";
    case NoiseFamily::Laplace: return "laplace";
    case NoiseFamily::GaussianMixture2: return "mixture";
    case NoiseFamily::CorrelatedGaussian: return "correlated";
    }
    return "?";
}

const char* scale_mode_name(ScaleMode m) {
    return m == ScaleMode::Homoscedastic ? "homoscedastic" : "heteroscedastic";
}

const char* singularity_name(Singularity s) {
    return s == Singularity::SkipSample ? "skip" : "abort";
}

} // namespace prnf
