#include "doctest.h"

#include "prnf/report.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const char* kTool = PRNF_TOOL_PATH;

struct TempDir {
    fs::path path;
    explicit TempDir(const char* tag) {
        path = fs::temp_directory_path() / (std::string("prnf_cli_") + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
    std::string file(const char* name) const { return (path / name).string(); }
};

int run(const std::string& args) {
    const std::string cmd = std::string(kTool) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    out << body;
}

// Small enough to train in well under a second.
const char* kTinyConfig =
    "[problem]\n"
    "kind = sin\n"
    "[data]\n"
    "n_train = 200\n"
    "[train]\n"
    "epochs = 4\n"
    "hidden = 6\n"
    "[tune]\n"
    "lambda_grid = 5, 80\n"
    "m_samples = 200\n"
    "[eval]\n"
    "n_samples = 400\n"
    "grid_points = 200\n"
    "x_points = 0.3, 0.6\n";

} // namespace

TEST_CASE("generate, train, eval pipeline produces the documented artifacts") {
    TempDir tmp("pipe");
    const std::string cfg = tmp.file("exp.cfg");
    write_file(cfg, kTinyConfig);
    const std::string dir = tmp.file("run");

    CHECK(run("generate --config " + cfg + " --out " + dir) == 0);
    CHECK(fs::exists(dir + "/dataset.csv"));

    CHECK(run("train --config " + cfg + " --out " + dir) == 0);
    CHECK(fs::exists(dir + "/checkpoint.txt"));
    CHECK(fs::exists(dir + "/loss_history.csv"));

    CHECK(run("eval --config " + cfg + " --out " + dir) == 0);
    CHECK(fs::exists(dir + "/report.txt"));
    CHECK(fs::exists(dir + "/kl_vs_x.csv"));

    prnf::Report rep = prnf::load_report(dir + "/report.txt");
    CHECK(rep.find("metrics", "mean_kl") != nullptr);
    CHECK(rep.find("problem", "kind") != nullptr); // embedded config echo
    prnf::CsvTable kl = prnf::load_csv(dir + "/kl_vs_x.csv");
    CHECK(kl.rows.size() == 2); // x_points has two entries

    // Refusal without --force, success with it.
    CHECK(run("train --config " + cfg + " --out " + dir) == 5);
    CHECK(run("train --config " + cfg + " --out " + dir + " --force") == 0);
}

TEST_CASE("identical config and seed give byte-identical artifacts") {
    TempDir tmp("det");
    const std::string cfg = tmp.file("exp.cfg");
    write_file(cfg, kTinyConfig);
    const std::string a = tmp.file("a"), b = tmp.file("b");

    for (const std::string& dir : {a, b}) {
        CHECK(run("generate --config " + cfg + " --out " + dir) == 0);
        CHECK(run("train --config " + cfg + " --out " + dir) == 0);
        CHECK(run("sample --config " + cfg + " --out " + dir + " --at 0.4 --n 50") == 0);
    }
    CHECK(slurp(a + "/dataset.csv") == slurp(b + "/dataset.csv"));
    CHECK(slurp(a + "/checkpoint.txt") == slurp(b + "/checkpoint.txt"));
    CHECK(slurp(a + "/loss_history.csv") == slurp(b + "/loss_history.csv"));
    CHECK(slurp(a + "/samples.csv") == slurp(b + "/samples.csv"));

    // A different training seed changes the checkpoint.
    const std::string c = tmp.file("c");
    CHECK(run("generate --config " + cfg + " --out " + c) == 0);
    CHECK(run("train --config " + cfg + " --out " + c + " --seed 99") == 0);
    CHECK(slurp(a + "/checkpoint.txt") != slurp(c + "/checkpoint.txt"));
}

TEST_CASE("checkpoints survive a load-save cycle byte-identically") {
    TempDir tmp("roundtrip");
    const std::string cfg = tmp.file("exp.cfg");
    write_file(cfg, kTinyConfig);
    const std::string dir = tmp.file("run");
    CHECK(run("generate --config " + cfg + " --out " + dir) == 0);
    CHECK(run("train --config " + cfg + " --out " + dir) == 0);

    // sample --model reads and validates the checkpoint; rewriting it through
    // the library happens in-process in the io tests, so here just assert the
    // tool accepts its own output and the bytes stay put.
    const std::string before = slurp(dir + "/checkpoint.txt");
    CHECK(run("sample --config " + cfg + " --out " + dir + " --at 0.5 --n 20") == 0);
    CHECK(slurp(dir + "/checkpoint.txt") == before);
}

TEST_CASE("error paths map to the documented exit codes") {
    TempDir tmp("err");
    const std::string cfg = tmp.file("exp.cfg");
    write_file(cfg, kTinyConfig);
    const std::string dir = tmp.file("run");
    fs::create_directories(dir);

    // 2: config errors (unknown key; also a config file that does not parse).
    const std::string bad = tmp.file("bad.cfg");
    write_file(bad, "[problem]\nbogus = 1\n");
    CHECK(run("generate --config " + bad + " --out " + dir) == 2);

    // 3: missing inputs.
    CHECK(run("train --config " + cfg + " --out " + tmp.file("empty")) == 3);
    CHECK(run("generate --config " + tmp.file("nonexistent.cfg") + " --out " + dir) == 3);

    // 4: checksum tampering.
    CHECK(run("generate --config " + cfg + " --out " + dir) == 0);
    CHECK(run("train --config " + cfg + " --out " + dir) == 0);
    std::string text = slurp(dir + "/checkpoint.txt");
    const std::size_t pos = text.find("0", text.find("[theta_h]"));
    REQUIRE(pos != std::string::npos);
    text[pos] = text[pos] == '9' ? '8' : '9';
    write_file(dir + "/checkpoint.txt", text);
    CHECK(run("sample --config " + cfg + " --out " + dir + " --at 0.5 --n 10 --force") == 4);

    // CLI misuse is nonzero without stealing the documented codes.
    const int misuse = run("no_such_command");
    CHECK(misuse != 0);
    const int missing_at = run("sample --config " + cfg + " --out " + dir);
    CHECK(missing_at != 0);
}

TEST_CASE("tune writes the scored grid and a winner checkpoint") {
    TempDir tmp("tune");
    const std::string cfg = tmp.file("exp.cfg");
    write_file(cfg, kTinyConfig);
    const std::string dir = tmp.file("run");
    CHECK(run("generate --config " + cfg + " --out " + dir) == 0);
    CHECK(run("tune --config " + cfg + " --out " + dir) == 0);
    CHECK(fs::exists(dir + "/lambda_grid.csv"));
    CHECK(fs::exists(dir + "/tune_report.txt"));
    CHECK(fs::exists(dir + "/checkpoint.txt"));
    prnf::CsvTable grid = prnf::load_csv(dir + "/lambda_grid.csv");
    REQUIRE(grid.rows.size() == 2);
    CHECK(grid.col("lambda") >= 0);
    CHECK(grid.col("cross_entropy") >= 0);
    prnf::Report rep = prnf::load_report(dir + "/tune_report.txt");
    CHECK(rep.find("tune", "best_lambda") != nullptr);
}

TEST_CASE("sweep trains every cell and summarizes the grid") {
    TempDir tmp("sweep");
    const std::string cfg = tmp.file("exp.cfg");
    write_file(cfg, std::string(kTinyConfig) +
                        "[sweep]\n"
                        "lambda_grid = 5, 80\n"
                        "hidden_grid = 4, 8\n");
    const std::string dir = tmp.file("run");
    CHECK(run("generate --config " + cfg + " --out " + dir) == 0);
    CHECK(run("sweep --config " + cfg + " --out " + dir) == 0);
    CHECK(fs::exists(dir + "/sweep_summary.csv"));
    CHECK(fs::exists(dir + "/sweep_report.txt"));
    prnf::CsvTable sum = prnf::load_csv(dir + "/sweep_summary.csv");
    CHECK(sum.rows.size() == 4);
    prnf::Report rep = prnf::load_report(dir + "/sweep_report.txt");
    CHECK(rep.find("sweep", "best_lambda") != nullptr);
    // Each cell directory holds its own artifacts.
    int cells = 0;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_directory() && entry.path().filename().string().rfind("cell_", 0) == 0) {
            CHECK(fs::exists(entry.path() / "checkpoint.txt"));
            CHECK(fs::exists(entry.path() / "report.txt"));
            ++cells;
        }
    CHECK(cells == 4);
}
