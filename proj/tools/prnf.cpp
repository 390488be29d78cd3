#include "prnf/commands.hpp"

#include <CLI11.hpp>

#include <functional>

namespace {

void add_common(CLI::App* sub, prnf::CliOptions& opt, const char* seed_help) {
    sub->add_option("--config", opt.config_path, "configuration file (omit for defaults)")
        ->option_text("FILE");
    sub->add_option("--out", opt.out_dir, "output directory (default: [output] dir or '.')")
        ->option_text("DIR");
    sub->add_flag("--force", opt.force, "overwrite existing outputs");
    sub->add_option("--seed", opt.seed, seed_help)->option_text("N");
    sub->add_option("--threads", opt.threads, "worker threads (0 = all hardware threads)")
        ->option_text("N");
}

void add_inputs(CLI::App* sub, prnf::CliOptions& opt, bool data, bool model) {
    if (data)
        sub->add_option("--data", opt.dataset_path, "dataset file (default <out>/dataset.csv)")
            ->option_text("FILE");
    if (model)
        sub->add_option("--model", opt.checkpoint_path,
                        "checkpoint file (default <out>/checkpoint.txt)")
            ->option_text("FILE");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"conditional pseudo-reversible normalizing flow toolkit"};
    app.require_subcommand(1);
    prnf::CliOptions opt;
    int exit_code = 0;

    CLI::App* generate = app.add_subcommand("generate", "draw a training dataset");
    add_common(generate, opt, "override the data seed");
    generate->callback([&] { exit_code = prnf::cmd_generate(opt); });

    CLI::App* train = app.add_subcommand("train", "train a model on a dataset");
    add_common(train, opt, "override the training seed");
    add_inputs(train, opt, true, true);
    train->callback([&] { exit_code = prnf::cmd_train(opt); });

    CLI::App* tune = app.add_subcommand(
        "tune", "select lambda by KDE cross-entropy over [tune] lambda_grid");
    add_common(tune, opt, "override the training seed");
    add_inputs(tune, opt, true, true);
    tune->callback([&] { exit_code = prnf::cmd_tune(opt); });

    CLI::App* sample = app.add_subcommand("sample", "draw conditional samples from a model");
    add_common(sample, opt, "override the sampling seed");
    add_inputs(sample, opt, false, true);
    sample->add_option("--at", opt.at, "conditioning point, comma-separated")
        ->option_text("V[,V...]")
        ->required();
    sample->add_option("--n", opt.n, "number of draws (default: eval.n_samples)")
        ->option_text("N");
    sample->callback([&] { exit_code = prnf::cmd_sample(opt); });

    CLI::App* eval = app.add_subcommand("eval", "run the benchmark metrics on a model");
    add_common(eval, opt, "override the evaluation seed");
    add_inputs(eval, opt, true, true);
    eval->callback([&] { exit_code = prnf::cmd_eval(opt); });

    CLI::App* sweep = app.add_subcommand(
        "sweep", "train and evaluate every [sweep] lambda x hidden cell");
    add_common(sweep, opt, "override the training seed");
    add_inputs(sweep, opt, true, false);
    sweep->callback([&] { exit_code = prnf::cmd_sweep(opt); });

    CLI11_PARSE(app, argc, argv);
    return exit_code;
}
