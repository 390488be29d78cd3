#include "prnf/commands.hpp"

#include "prnf/checkpoint.hpp"
#include "prnf/config.hpp"
#include "prnf/dataset_io.hpp"
#include "prnf/error.hpp"
#include "prnf/evaluate.hpp"
#include "prnf/report.hpp"
#include "prnf/training.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <vector>

namespace fs = std::filesystem;

namespace prnf {

namespace {

int guard(const char* cmd, const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "prnf %s: config error: %s\n", cmd, e.what());
        return 2;
    } catch (const ChecksumError& e) {
        std::fprintf(stderr, "prnf %s: %s\n", cmd, e.what());
        return 4;
    } catch (const IoError& e) {
        std::fprintf(stderr, "prnf %s: %s\n", cmd, e.what());
        return 3;
    } catch (const TrainingError& e) {
        std::fprintf(stderr, "prnf %s: training failed: %s\n", cmd, e.what());
        return 6;
    } catch (const SingularJacobianError& e) {
        std::fprintf(stderr, "prnf %s: %s\n", cmd, e.what());
        return 6;
    } catch (const DegenerateDensityError& e) {
        std::fprintf(stderr, "prnf %s: %s\n", cmd, e.what());
        return 6;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "prnf %s: internal error: %s\n", cmd, e.what());
        return 1;
    }
}

ExperimentConfig load_resolved(const CliOptions& opt) {
    ExperimentConfig cfg =
        opt.config_path.empty() ? ExperimentConfig{} : load_config(opt.config_path);
    if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
    if (cfg.out_dir.empty()) cfg.out_dir = ".";
    if (opt.threads >= 0) cfg.train.threads = opt.threads;
    resolve_defaults(cfg);
    return cfg;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

// True (and a message on stderr) when an output exists and --force is absent.
bool refuse(const std::vector<std::string>& outputs, bool force, const char* cmd) {
    if (force) return false;
    for (const std::string& p : outputs) {
        std::error_code ec;
        if (fs::exists(p, ec)) {
            std::fprintf(stderr, "prnf %s: refusing to overwrite %s (pass --force)\n", cmd,
                         p.c_str());
            return true;
        }
    }
    return false;
}

std::string dataset_path_of(const CliOptions& opt, const ExperimentConfig& cfg) {
    return opt.dataset_path.empty() ? join(cfg.out_dir, "dataset.csv") : opt.dataset_path;
}

std::string checkpoint_path_of(const CliOptions& opt, const ExperimentConfig& cfg) {
    return opt.checkpoint_path.empty() ? join(cfg.out_dir, "checkpoint.txt")
                                       : opt.checkpoint_path;
}

void append_echo(Report& r, const ExperimentConfig& cfg) {
    Report echo = parse_report(config_echo(cfg));
    for (auto& s : echo.sections) r.sections.push_back(std::move(s));
}

void write_loss_csv(const std::vector<LossRecord>& history, const std::string& path) {
    CsvTable t;
    t.header = {"epoch", "l1", "l2", "total", "skipped"};
    for (const LossRecord& rec : history)
        t.rows.push_back({std::to_string(rec.epoch), csv_cell(rec.l1), csv_cell(rec.l2),
                          csv_cell(rec.total), std::to_string(rec.skipped)});
    save_csv(t, path);
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

// The evaluation pipeline shared by cmd_eval and cmd_sweep. Writes the
// per-point CSVs next to the report and returns the report with aggregate
// metrics filled in; `headline` receives the metric the sweep ranks cells by.
Report run_eval(const ExperimentConfig& cfg, const PrNfModel& model,
                const std::string& dataset_path, const std::string& out_dir,
                double* headline) {
    Report r;
    const auto t0 = std::chrono::steady_clock::now();
    if (cfg.kind != ProblemKind::Hd && model.direction == Direction::Forward) {
        const Problem1D p = problem_1d(cfg);
        const Dataset data = load_dataset(dataset_path);
        if (data.cond.cols() != 1 || data.target.cols() != 1)
            throw ConfigError("problem.kind: dataset " + dataset_path +
                              " is not 1-D (the y grid derives from its targets)");
        const GridSpec y_grid = default_y_grid(p, data.target, cfg.grid_points);
        const std::vector<Eval1DPoint> pts = eval_forward_1d(
            model_sampler(model), p, cfg.eval_x, cfg.n_samples, y_grid, cfg.eval_seed);
        CsvTable t;
        t.header = {"x", "kl", "excluded", "in_domain"};
        std::vector<double> in_dom, out_dom, all;
        for (const Eval1DPoint& pt : pts) {
            const bool in = pt.x >= 0.0 && pt.x <= 1.0;
            t.rows.push_back({csv_cell(pt.x), csv_cell(pt.kl), pt.excluded ? "1" : "0",
                              in ? "1" : "0"});
            if (pt.excluded) continue;
            all.push_back(pt.kl);
            (in ? in_dom : out_dom).push_back(pt.kl);
        }
        save_csv(t, join(out_dir, "kl_vs_x.csv"));
        r.add("report", "command", "eval");
        r.add("report", "pipeline", "forward-1d");
        r.add("report", "points_file", "kl_vs_x.csv");
        r.add("metrics", "mean_kl", csv_cell(mean_of(all)));
        r.add("metrics", "mean_kl_in_domain", csv_cell(mean_of(in_dom)));
        r.add("metrics", "mean_kl_out_of_domain", csv_cell(mean_of(out_dom)));
        r.add("metrics", "n_points", std::to_string(pts.size()));
        r.add("metrics", "n_excluded", std::to_string(pts.size() - all.size()));
        r.add("metrics", "y_grid_lo", csv_cell(y_grid.lo[0]));
        r.add("metrics", "y_grid_hi", csv_cell(y_grid.hi[0]));
        if (headline) *headline = mean_of(in_dom);
    } else if (cfg.kind != ProblemKind::Hd) {
        const Problem1D p = problem_1d(cfg);
        const GridSpec x_grid = GridSpec::linear(0.0, 1.0, cfg.grid_points);
        const std::vector<EvalInvPoint> pts = eval_inverse_1d(
            model_sampler(model), p, cfg.eval_y, cfg.n_samples, x_grid, cfg.eval_seed);
        CsvTable t;
        t.header = {"y", "kl"};
        std::vector<double> kls;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            t.rows.push_back({csv_cell(pts[i].y), csv_cell(pts[i].kl)});
            kls.push_back(pts[i].kl);
            CsvTable dens;
            dens.header = {"x", "oracle_log", "kde_log"};
            for (long j = 0; j < x_grid.count[0]; ++j)
                dens.rows.push_back({csv_cell(x_grid.point(0, j)),
                                     csv_cell(pts[i].oracle_log[static_cast<std::size_t>(j)]),
                                     csv_cell(pts[i].kde_log[static_cast<std::size_t>(j)])});
            save_csv(dens, join(out_dir, "density_y" + std::to_string(i) + ".csv"));
        }
        save_csv(t, join(out_dir, "kl_vs_y.csv"));
        r.add("report", "command", "eval");
        r.add("report", "pipeline", "inverse-1d");
        r.add("report", "points_file", "kl_vs_y.csv");
        r.add("metrics", "mean_kl", csv_cell(mean_of(kls)));
        r.add("metrics", "n_points", std::to_string(pts.size()));
        if (headline) *headline = mean_of(kls);
    } else {
        if (model.direction != Direction::Forward)
            throw ConfigError(
                "problem.direction: hd problems evaluate in the forward direction only");
        const ProblemHD p = problem_hd(cfg);
        const CondLogPdf model_logpdf = [&model](const std::vector<double>& cond,
                                                 const double* y) {
            return log_density(model, cond,
                               std::vector<double>(y, y + model.s));
        };
        const HdEval ev = eval_hd(model_sampler(model), p, cfg.n_test, cfg.n_samples,
                                  cfg.eval_seed, model_logpdf);
        CsvTable t;
        for (int j = 0; j < p.d; ++j) t.header.push_back("x" + std::to_string(j));
        t.header.insert(t.header.end(), {"err_mean", "err_std", "err_cov", "kl", "kl_se"});
        for (const HdPoint& pt : ev.points) {
            std::vector<std::string> row;
            for (double xj : pt.x) row.push_back(csv_cell(xj));
            row.push_back(csv_cell(pt.err_mean));
            row.push_back(csv_cell(pt.err_std));
            row.push_back(csv_cell(pt.err_cov));
            row.push_back(csv_cell(pt.kl));
            row.push_back(csv_cell(pt.kl_se));
            t.rows.push_back(std::move(row));
        }
        save_csv(t, join(out_dir, "points.csv"));
        r.add("report", "command", "eval");
        r.add("report", "pipeline", "hd");
        r.add("report", "points_file", "points.csv");
        r.add("metrics", "err_mean", csv_cell(ev.err_mean));
        r.add("metrics", "err_std", csv_cell(ev.err_std));
        if (ev.has_cov) r.add("metrics", "err_cov", csv_cell(ev.err_cov));
        r.add("metrics", "avg_kl", csv_cell(ev.avg_kl));
        r.add("metrics", "kl_estimator", ev.kl_estimator);
        r.add("metrics", "n_points", std::to_string(ev.points.size()));
        if (headline) *headline = ev.avg_kl;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.add("report", "model_lambda", csv_cell(model.lambda));
    r.add("report", "model_hidden", std::to_string(model.theta_h.spec.hidden_dim));
    r.add("report", "eval_seed", std::to_string(cfg.eval_seed));
    r.add("report", "n_samples", std::to_string(cfg.n_samples));
    r.add("report", "wall_seconds", csv_cell(secs));
    return r;
}

void check_model_matches(const ExperimentConfig& cfg, const PrNfModel& model) {
    if (model.direction != cfg.direction)
        throw ConfigError(std::string("problem.direction: config says ") +
                          direction_name(cfg.direction) + " but the checkpoint was trained " +
                          direction_name(model.direction));
    const int want_d = cfg.kind == ProblemKind::Hd
                           ? (cfg.direction == Direction::Forward ? cfg.d : cfg.s)
                           : 1;
    const int want_s = cfg.kind == ProblemKind::Hd
                           ? (cfg.direction == Direction::Forward ? cfg.s : cfg.d)
                           : 1;
    if (model.d != want_d || model.s != want_s)
        throw ConfigError("problem.kind: checkpoint dimensions (d=" + std::to_string(model.d) +
                          ", s=" + std::to_string(model.s) + ") do not match the problem (d=" +
                          std::to_string(want_d) + ", s=" + std::to_string(want_s) + ")");
}

} // namespace

int cmd_generate(const CliOptions& opt) {
    return guard("generate", [&] {
        ExperimentConfig cfg = load_resolved(opt);
        if (opt.seed) cfg.data_seed = *opt.seed;
        ensure_dir(cfg.out_dir);
        const std::string path = dataset_path_of(opt, cfg);
        if (refuse({path}, opt.force, "generate")) return 5;
        const Dataset data = generate_dataset(cfg);
        save_dataset(data, path);
        std::printf("wrote %s (%d rows, d=%d, s=%d)\n", path.c_str(), data.cond.rows(),
                    data.cond.cols(), data.target.cols());
        return 0;
    });
}

int cmd_train(const CliOptions& opt) {
    return guard("train", [&] {
        ExperimentConfig cfg = load_resolved(opt);
        if (opt.seed) cfg.train.seed = *opt.seed;
        ensure_dir(cfg.out_dir);
        const std::string ckpt_path = checkpoint_path_of(opt, cfg);
        const std::string loss_path = join(cfg.out_dir, "loss_history.csv");
        if (refuse({ckpt_path, loss_path}, opt.force, "train")) return 5;
        Dataset data = load_dataset(dataset_path_of(opt, cfg));
        if (cfg.direction == Direction::Inverse) data = swap_direction(data);
        const auto t0 = std::chrono::steady_clock::now();
        const TrainResult result = train(data, cfg.train);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        save_checkpoint({1, result.model, cfg.train, cfg.data_seed}, ckpt_path);
        write_loss_csv(result.history, loss_path);
        const LossRecord& last = result.history.back();
        std::printf("trained %ld epochs in %.1fs: l1=%.6g l2=%.6g total=%.6g\n",
                    cfg.train.epochs, secs, last.l1, last.l2, last.total);
        std::printf("wrote %s and %s\n", ckpt_path.c_str(), loss_path.c_str());
        return 0;
    });
}

int cmd_tune(const CliOptions& opt) {
    return guard("tune", [&] {
        ExperimentConfig cfg = load_resolved(opt);
        if (opt.seed) cfg.train.seed = *opt.seed;
        ensure_dir(cfg.out_dir);
        const std::string grid_path = join(cfg.out_dir, "lambda_grid.csv");
        const std::string report_path = join(cfg.out_dir, "tune_report.txt");
        const std::string ckpt_path = checkpoint_path_of(opt, cfg);
        const std::string loss_path = join(cfg.out_dir, "loss_history.csv");
        if (refuse({grid_path, report_path, ckpt_path, loss_path}, opt.force, "tune"))
            return 5;
        Dataset data = load_dataset(dataset_path_of(opt, cfg));
        if (cfg.direction == Direction::Inverse) data = swap_direction(data);
        const auto t0 = std::chrono::steady_clock::now();
        const LambdaGrid grid = tune_lambda(data, cfg.lambda_grid, cfg.train, cfg.tune_samples);
        CsvTable t;
        t.header = {"lambda", "cross_entropy"};
        for (std::size_t j = 0; j < grid.lambdas.size(); ++j)
            t.rows.push_back({csv_cell(grid.lambdas[j]), csv_cell(grid.cross_entropy[j])});
        save_csv(t, grid_path);
        const double best = grid.lambdas[static_cast<std::size_t>(grid.argmin)];
        // The winner is retrained from scratch with the same seed, reproducing
        // the candidate run bit for bit.
        cfg.train.lambda = best;
        const TrainResult result = train(data, cfg.train);
        save_checkpoint({1, result.model, cfg.train, cfg.data_seed}, ckpt_path);
        write_loss_csv(result.history, loss_path);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        Report r;
        r.add("tune", "best_lambda", csv_cell(best));
        r.add("tune", "best_index", std::to_string(grid.argmin));
        r.add("tune", "grid_file", "lambda_grid.csv");
        r.add("tune", "m_samples", std::to_string(cfg.tune_samples));
        r.add("tune", "wall_seconds", csv_cell(secs));
        append_echo(r, cfg);
        save_report(r, report_path);
        std::printf("best lambda = %s (H = %s)\n", csv_cell(best).c_str(),
                    csv_cell(grid.cross_entropy[static_cast<std::size_t>(grid.argmin)]).c_str());
        std::printf("wrote %s, %s, %s\n", grid_path.c_str(), report_path.c_str(),
                    ckpt_path.c_str());
        return 0;
    });
}

int cmd_sample(const CliOptions& opt) {
    return guard("sample", [&] {
        ExperimentConfig cfg = load_resolved(opt);
        const Checkpoint ckpt = load_checkpoint(checkpoint_path_of(opt, cfg));
        if (opt.at.empty())
            throw ConfigError("--at: a conditioning point is required (comma-separated)");
        std::vector<double> at;
        {
            std::size_t start = 0;
            while (true) {
                std::size_t comma = opt.at.find(',', start);
                const std::string tok =
                    opt.at.substr(start, comma == std::string::npos ? std::string::npos
                                                                    : comma - start);
                double v = 0.0;
                auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
                if (ec != std::errc() || p != tok.data() + tok.size() || !std::isfinite(v))
                    throw ConfigError("--at: '" + tok + "' is not a finite number");
                at.push_back(v);
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
        }
        if (static_cast<int>(at.size()) != ckpt.model.d)
            throw ConfigError("--at: got " + std::to_string(at.size()) +
                              " coordinates, model conditions on " +
                              std::to_string(ckpt.model.d));
        const long n = opt.n > 0 ? opt.n : cfg.n_samples;
        const std::uint64_t seed = opt.seed ? *opt.seed : cfg.eval_seed;
        ensure_dir(cfg.out_dir);
        const std::string path = join(cfg.out_dir, "samples.csv");
        if (refuse({path}, opt.force, "sample")) return 5;
        const Matrix draws = sample_conditional(ckpt.model, at, n, seed);
        std::string out;
        out += "# prnf-samples v1\n";
        out += "# at = " + opt.at + "\n";
        out += "# n = " + std::to_string(n) + "\n";
        out += "# seed = " + std::to_string(seed) + "\n";
        out += std::string("# direction = ") + direction_name(ckpt.model.direction) + "\n";
        for (int j = 0; j < draws.cols(); ++j) {
            if (j) out += ',';
            out += "target" + std::to_string(j);
        }
        out += '\n';
        for (int i = 0; i < draws.rows(); ++i) {
            const double* row = draws.row_ptr(i);
            for (int j = 0; j < draws.cols(); ++j) {
                if (j) out += ',';
                out += csv_cell(row[j]);
            }
            out += '\n';
        }
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open samples file for writing: " + path);
        f.write(out.data(), static_cast<std::streamsize>(out.size()));
        f.flush();
        if (!f) throw IoError("error writing samples file: " + path);
        std::printf("wrote %s (%ld draws at %s)\n", path.c_str(), n, opt.at.c_str());
        return 0;
    });
}

int cmd_eval(const CliOptions& opt) {
    return guard("eval", [&] {
        ExperimentConfig cfg = load_resolved(opt);
        if (opt.seed) cfg.eval_seed = *opt.seed;
        ensure_dir(cfg.out_dir);
        const std::string report_path = join(cfg.out_dir, "report.txt");
        if (refuse({report_path}, opt.force, "eval")) return 5;
        const Checkpoint ckpt = load_checkpoint(checkpoint_path_of(opt, cfg));
        check_model_matches(cfg, ckpt.model);
        double headline = 0.0;
        Report r = run_eval(cfg, ckpt.model, dataset_path_of(opt, cfg), cfg.out_dir,
                            &headline);
        append_echo(r, cfg);
        save_report(r, report_path);
        std::printf("wrote %s (headline metric %.6g)\n", report_path.c_str(), headline);
        return 0;
    });
}

int cmd_sweep(const CliOptions& opt) {
    return guard("sweep", [&] {
        ExperimentConfig cfg = load_resolved(opt);
        if (opt.seed) cfg.train.seed = *opt.seed;
        ensure_dir(cfg.out_dir);
        const std::string summary_path = join(cfg.out_dir, "sweep_summary.csv");
        const std::string report_path = join(cfg.out_dir, "sweep_report.txt");
        if (refuse({summary_path, report_path}, opt.force, "sweep")) return 5;
        Dataset data = load_dataset(dataset_path_of(opt, cfg));
        if (cfg.direction == Direction::Inverse) data = swap_direction(data);
        const auto t0 = std::chrono::steady_clock::now();

        CsvTable summary;
        summary.header = {"lambda", "hidden", "headline", "cell_dir"};
        std::vector<double> headlines;
        std::size_t best = 0;
        for (double lambda : cfg.sweep_lambda) {
            for (long hidden : cfg.sweep_hidden) {
                ExperimentConfig cell_cfg = cfg;
                cell_cfg.train.lambda = lambda;
                cell_cfg.train.hidden_dim = static_cast<int>(hidden);
                const std::string cell_dir = join(
                    cfg.out_dir, "cell_l" + csv_cell(lambda) + "_h" + std::to_string(hidden));
                ensure_dir(cell_dir);
                const TrainResult result = train(data, cell_cfg.train);
                save_checkpoint({1, result.model, cell_cfg.train, cfg.data_seed},
                                join(cell_dir, "checkpoint.txt"));
                write_loss_csv(result.history, join(cell_dir, "loss_history.csv"));
                double headline = 0.0;
                Report cell_report = run_eval(cell_cfg, result.model,
                                              dataset_path_of(opt, cfg), cell_dir, &headline);
                append_echo(cell_report, cell_cfg);
                save_report(cell_report, join(cell_dir, "report.txt"));
                if (headlines.empty() || headline < headlines[best])
                    best = headlines.size();
                headlines.push_back(headline);
                summary.rows.push_back({csv_cell(lambda), std::to_string(hidden),
                                        csv_cell(headline), cell_dir});
                std::printf("cell lambda=%s hidden=%ld: headline %.6g\n",
                            csv_cell(lambda).c_str(), hidden, headline);
                std::fflush(stdout);
            }
        }
        save_csv(summary, summary_path);
        double lo = headlines[0], hi = headlines[0];
        for (double h : headlines) {
            lo = std::min(lo, h);
            hi = std::max(hi, h);
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        Report r;
        r.add("sweep", "cells", std::to_string(headlines.size()));
        r.add("sweep", "best_lambda", summary.rows[best][0]);
        r.add("sweep", "best_hidden", summary.rows[best][1]);
        r.add("sweep", "best_headline", csv_cell(headlines[best]));
        r.add("sweep", "headline_min", csv_cell(lo));
        r.add("sweep", "headline_mean", csv_cell(mean_of(headlines)));
        r.add("sweep", "headline_max", csv_cell(hi));
        r.add("sweep", "summary_file", "sweep_summary.csv");
        r.add("sweep", "wall_seconds", csv_cell(secs));
        append_echo(r, cfg);
        save_report(r, report_path);
        std::printf("wrote %s and %s (best cell: lambda=%s hidden=%s)\n", summary_path.c_str(),
                    report_path.c_str(), summary.rows[best][0].c_str(),
                    summary.rows[best][1].c_str());
        return 0;
    });
}

} // namespace prnf
