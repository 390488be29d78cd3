#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace prnf {

// Options shared by the prnf subcommands. Commands catch their own errors and
// return process exit codes: 0 success, 2 config, 3 I/O, 4 checksum mismatch,
// 5 overwrite refusal, 6 training/runtime failure, 1 internal error.
struct CliOptions {
    std::string config_path;           // --config; empty = built-in defaults
    std::string out_dir;               // --out; overrides [output] dir, default "."
    bool force = false;                // --force: allow overwriting outputs
    std::optional<std::uint64_t> seed; // --seed: the command's primary seed
    int threads = -1;                  // --threads; -1 = config value
    std::string at;                    // sample: comma-separated conditioning point
    long n = 0;                        // sample: draw count; 0 = eval.n_samples
    std::string dataset_path;          // --data; default <out>/dataset.csv
    std::string checkpoint_path;       // --model; default <out>/checkpoint.txt
};

int cmd_generate(const CliOptions& opt); // dataset.csv
int cmd_train(const CliOptions& opt);    // checkpoint.txt + loss_history.csv
int cmd_tune(const CliOptions& opt);     // lambda_grid.csv + tune_report.txt + best checkpoint
int cmd_sample(const CliOptions& opt);   // samples.csv
int cmd_eval(const CliOptions& opt);     // report.txt + per-point CSV exports
int cmd_sweep(const CliOptions& opt);    // per-cell dirs + sweep_summary.csv + sweep_report.txt

} // namespace prnf
