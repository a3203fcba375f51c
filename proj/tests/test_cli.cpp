#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kCli = IDL_CLI_PATH;

struct CliResult {
    int exit_code = -1;
    std::string output;
};

CliResult run(const std::string& args) {
    const fs::path log = fs::temp_directory_path() / "idl_cli_out.txt";
    const std::string cmd = kCli + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    CliResult r;
#ifdef _WIN32
    r.exit_code = status;
#else
    r.exit_code = WEXITSTATUS(status);
#endif
    std::ifstream f(log);
    std::stringstream ss;
    ss << f.rdbuf();
    r.output = ss.str();
    return r;
}

std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("gen-data is deterministic and manifest-stamped") {
    TempDir a("idl_cli_gen_a"), b("idl_cli_gen_b");
    REQUIRE(run("gen-data --task identity --n 100 --seed 5 --out " + a.path.string())
                .exit_code == 0);
    REQUIRE(run("gen-data --task identity --n 100 --seed 5 --out " + b.path.string())
                .exit_code == 0);
    CHECK(read_file(a.path / "inputs.bin") == read_file(b.path / "inputs.bin"));
    CHECK(read_file(a.path / "targets.bin") == read_file(b.path / "targets.bin"));
    CHECK(fs::exists(a.path / "dataset.json"));
    const std::string manifest = read_file(a.path / "manifest.json");
    CHECK(manifest.find("command_line") != std::string::npos);
    CHECK(manifest.find("fnv1a64:") != std::string::npos);

    // a different seed changes the data
    TempDir c("idl_cli_gen_c");
    REQUIRE(run("gen-data --task identity --n 100 --seed 6 --out " + c.path.string())
                .exit_code == 0);
    CHECK(read_file(a.path / "inputs.bin") != read_file(c.path / "inputs.bin"));
}

TEST_CASE("train / eval / sweep pipeline") {
    TempDir data("idl_cli_data"), rund("idl_cli_run"), evald("idl_cli_eval"),
        sweepd("idl_cli_sweep");
    REQUIRE(run("gen-data --task identity --n 200 --seed 3 --out " + data.path.string())
                .exit_code == 0);
    REQUIRE(run("train --task identity --model implicit --train-n 200 --epochs 2 "
                "--batch 64 --seed 3 --out " + rund.path.string())
                .exit_code == 0);
    CHECK(fs::exists(rund.path / "checkpoint.bin"));
    CHECK(fs::exists(rund.path / "run.json"));
    CHECK(fs::exists(rund.path / "manifest.json"));

    const auto ev = run("eval --model-file " + (rund.path / "checkpoint.bin").string() +
                        " --data " + data.path.string() + " --out " + evald.path.string());
    REQUIRE(ev.exit_code == 0);
    CHECK(ev.output.find("mse") != std::string::npos);
    CHECK(fs::exists(evald.path / "metrics.json"));
    CHECK(fs::exists(evald.path / "metrics.csv"));

    const auto sw = run("sweep --model-file " + (rund.path / "checkpoint.bin").string() +
                        " --task identity --shifts 10,20,40,80 --seed 3 --test-n 100 --out " +
                        sweepd.path.string());
    REQUIRE(sw.exit_code == 0);
    const std::string csv = read_file(sweepd.path / "sweep.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);  // header + 4 shifts
    CHECK(csv.rfind("kappa,", 0) == 0);
    CHECK(fs::exists(sweepd.path / "sweep.json"));
}

TEST_CASE("train accepts a JSON config file with flag precedence") {
    TempDir rund("idl_cli_cfg_run");
    const fs::path cfg = fs::temp_directory_path() / "idl_cli_cfg.json";
    {
        std::ofstream f(cfg);
        f << R"({"model": "mlp", "epochs": 1, "train_n": 64, "batch_size": 32, "seed": 4})";
    }
    // --epochs on the command line overrides the config's value
    REQUIRE(run("train --task identity --config " + cfg.string() +
                " --epochs 2 --out " + rund.path.string())
                .exit_code == 0);
    const std::string runjson = read_file(rund.path / "run.json");
    CHECK(std::count(runjson.begin(), runjson.end(), ',') >= 1);  // two epoch losses
    CHECK(runjson.find("epoch_loss") != std::string::npos);
    fs::remove(cfg);
}

TEST_CASE("gradcheck subcommand reports PASS with exit 0") {
    const auto r = run("gradcheck --model mlp --trials 1 --seed 2");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("PASS") != std::string::npos);
}

TEST_CASE("error paths map to documented exit codes") {
    TempDir out("idl_cli_err");
    // unknown task -> usage error
    CHECK(run("gen-data --task nope --out " + out.path.string()).exit_code == 2);
    // missing checkpoint -> runtime error
    CHECK(run("eval --model-file /nonexistent/ckpt.bin --data " + out.path.string())
              .exit_code == 3);
    // missing required option -> CLI parse error (nonzero)
    CHECK(run("sweep --task identity").exit_code != 0);
}
