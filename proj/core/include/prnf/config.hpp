#pragma once

#include "prnf/problems.hpp"
#include "prnf/training.hpp"

#include <string>
#include <vector>

namespace prnf {

enum class ProblemKind { Sin, Quadratic, Hd };

// Everything an experiment needs, with defaults reproducing the reference
// benchmark settings (20K/30K samples, 256 hidden units, 2000 epochs, λ = 80,
// N_test = 100, N_sample = 20K). Sentinels (-1, 0, NaN) mark fields whose
// default depends on the problem kind; resolve_defaults() fills them.
struct ExperimentConfig {
    // [problem]
    ProblemKind kind = ProblemKind::Sin;
    Direction direction = Direction::Forward;
    int d = 20;                         // hd only
    int s = 5;                          // hd only
    NoiseFamily noise = NoiseFamily::Gaussian;
    ScaleMode noise_mode = ScaleMode::Homoscedastic;
    double noise_scale = -1.0;          // 1-D std/scale; < 0 = family default
    double noise_var = 0.1;             // hd per-coordinate noise variance
    double mix_mean = 0.1;              // hd mixture component mean magnitude
    std::uint64_t sigma_seed = 1;       // hd correlated covariance seed
    std::uint64_t a_seed = 1;           // hd linear map seed

    // [data]
    long n_train = 0;                   // 0 = 20000 (1-D) or 30000 (hd)
    std::uint64_t data_seed = 11;

    // [train]
    TrainConfig train;

    // [tune]
    std::vector<double> lambda_grid = {1.0, 50.0, 100.0, 200.0};
    long tune_samples = 20000;

    // [eval]
    long n_test = 100;
    long n_samples = 20000;
    std::uint64_t eval_seed = 99;
    long grid_points = 2000;
    std::vector<double> eval_x;         // 1-D forward test points; empty = -1..2 step 0.05
    std::vector<double> eval_y;         // 1-D inverse test points; empty = {-0.5, 0, 0.5}

    // [sweep]
    std::vector<double> sweep_lambda = {1.0, 50.0, 100.0, 200.0};
    std::vector<long> sweep_hidden = {400, 600, 800, 1000};

    // [output]
    std::string out_dir;                // usually set via --out
};

// Parses the key-value section grammar (docs/config.md). Unknown sections or
// keys, duplicate keys, and malformed values raise ConfigError naming the
// offending "section.key" and line.
ExperimentConfig parse_config(const std::string& text);

// parse_config over the file's bytes; missing/unreadable file raises IoError.
ExperimentConfig load_config(const std::string& path);

// Fills kind-dependent sentinels and validates ranges (raises ConfigError).
void resolve_defaults(ExperimentConfig& cfg);

// Problem objects from a resolved config. problem_1d/problem_hd require the
// matching kind.
Problem1D problem_1d(const ExperimentConfig& cfg);
ProblemHD problem_hd(const ExperimentConfig& cfg);

// Fresh training data per the config, in forward (x | y) column order.
Dataset generate_dataset(const ExperimentConfig& cfg);

// Canonical text of a resolved config: every field, fixed order, parseable by
// parse_config. Reports embed it so results are reproducible from the report
// alone.
std::string config_echo(const ExperimentConfig& cfg);

const char* problem_kind_name(ProblemKind k);
const char* direction_name(Direction d);
const char* noise_family_name(NoiseFamily f);
const char* scale_mode_name(ScaleMode m);
const char* singularity_name(Singularity s);

} // namespace prnf
