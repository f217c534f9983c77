#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

std::string cli_bin() {
    const char* bin = std::getenv("FDRLC_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "FDRLC_BIN must point at the fdrlc binary");
    return bin;
}

int run(const std::string& args) {
    const std::string cmd = cli_bin() + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("fdr_cli_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const {
        return (path / name).string();
    }
};

const std::string kSmall =
    " --n-future 100 --n-skip 100 --n-lower 4 --n-upper 4 --ratio 2.0"
    " --alpha-min 1e-4 --grid-points-per-decade 10";

}  // namespace

TEST_CASE("gen is deterministic and writes a manifest") {
    TempDir dir;
    std::ofstream(dir / "profile.txt") << "5000 0.9\n5000 0.6\n";

    CHECK(run("gen --profile " + (dir / "profile.txt") + " --seed 7 --out " +
              (dir / "a.fdrt")) == 0);
    CHECK(run("gen --profile " + (dir / "profile.txt") + " --seed 7 --out " +
              (dir / "b.fdrt")) == 0);
    CHECK(file_bytes(dir / "a.fdrt") == file_bytes(dir / "b.fdrt"));
    CHECK(fs::exists(dir / "a.fdrt.manifest.json"));
}

TEST_CASE("gen --ge produces the requested count; seed is mandatory") {
    TempDir dir;
    CHECK(run("gen --ge 0.001,0.001,0.95,0.40 --n 10000 --seed 1 --out " +
              (dir / "ge.csv")) == 0);
    std::ifstream in(dir / "ge.csv");
    std::size_t lines = 0;
    std::string line;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 10000);

    CHECK(run("gen --ge 0.001,0.001,0.95,0.40 --n 100 --out " + (dir / "x.csv")) == 2);
    CHECK(run("gen --seed 1 --out " + (dir / "y.csv")) == 2);  // no generator
    CHECK(run("gen --ge bad --n 10 --seed 1 --out " + (dir / "z.csv")) == 2);
}

TEST_CASE("fit rejects a trace shorter than N_s + N_f + 1") {
    TempDir dir;
    std::ofstream(dir / "profile.txt") << "100 0.9\n";
    REQUIRE(run("gen --profile " + (dir / "profile.txt") + " --seed 2 --out " +
                (dir / "tiny.csv")) == 0);
    CHECK(run("fit --train " + (dir / "tiny.csv") + " --out " + (dir / "m.json")) == 2);
}

TEST_CASE("fit + eval round trip, byte-identical reports on rerun") {
    TempDir dir;
    std::ofstream(dir / "profile.txt") << "10000 0.9\n10000 0.6\n10000 0.85\n";
    REQUIRE(run("gen --profile " + (dir / "profile.txt") + " --seed 3 --out " +
                (dir / "train.fdrt")) == 0);
    REQUIRE(run("gen --profile " + (dir / "profile.txt") + " --seed 4 --out " +
                (dir / "test.fdrt")) == 0);

    REQUIRE(run("fit --train " + (dir / "train.fdrt") + " --out " +
                (dir / "model.json") + kSmall + " --sweep-lambda-max") == 0);
    CHECK(fs::exists(dir / "model.json.report.json"));
    CHECK(fs::exists(dir / "model.json.lambda_sweep.csv"));

    REQUIRE(run("eval --model " + (dir / "model.json") + " --test " +
                (dir / "test.fdrt") + " --out " + (dir / "r1.json") +
                " --n-future 100 --n-skip 100 --emit-series " + (dir / "s.csv")) == 0);
    REQUIRE(run("eval --model " + (dir / "model.json") + " --test " +
                (dir / "test.fdrt") + " --out " + (dir / "r2.json") +
                " --n-future 100 --n-skip 100") == 0);
    CHECK(file_bytes(dir / "r1.json") == file_bytes(dir / "r2.json"));

    // series header and row shape
    std::ifstream series(dir / "s.csv");
    std::string header;
    std::getline(series, header);
    CHECK(header == "i,t_i,y_i");

    // baseline mode without a model file
    CHECK(run("eval --ema-alpha 0.01 --test " + (dir / "test.fdrt") + " --out " +
              (dir / "ema.json") + " --n-future 100 --n-skip 100") == 0);

    // corrupted model
    std::ofstream(dir / "broken.json") << "{\"format\":\"elc-model\"}";
    CHECK(run("eval --model " + (dir / "broken.json") + " --test " +
              (dir / "test.fdrt") + " --out " + (dir / "r3.json") +
              " --n-future 100 --n-skip 100") == 2);
}

TEST_CASE("compare: degenerate single-alpha config gives identical statistics") {
    TempDir dir;
    std::ofstream(dir / "profile.txt") << "8000 0.85\n8000 0.6\n";
    REQUIRE(run("gen --profile " + (dir / "profile.txt") + " --seed 5 --out " +
                (dir / "train.csv")) == 0);
    REQUIRE(run("gen --profile " + (dir / "profile.txt") + " --seed 6 --out " +
                (dir / "test.csv")) == 0);

    REQUIRE(run("compare --train " + (dir / "train.csv") + " --test " +
                (dir / "test.csv") + " --out " + (dir / "cmp") +
                " --n-future 100 --n-skip 100 --n-lower 0 --n-upper 0"
                " --lambda-max 1.0 --alpha-min 1e-4") == 0);

    nlohmann::json ema, elc;
    std::ifstream(dir / "cmp.ema.json") >> ema;
    std::ifstream(dir / "cmp.elc.json") >> elc;
    CHECK(ema == elc);

    // table has header + two rows
    std::ifstream table(dir / "cmp.table.csv");
    std::string line;
    std::getline(table, line);
    CHECK(line ==
          "model,params,mu_e2,e2_p95,e2_max,mu_abs_e,sigma_abs_e,abs_e_p90,"
          "abs_e_p95,abs_e_p99,abs_e_max,e_min,e_p5,e_p95,e_max");
    std::getline(table, line);
    CHECK(line.substr(0, 4) == "EMA,");
    std::getline(table, line);
    CHECK(line.substr(0, 4) == "ELC,");
}

TEST_CASE("compare reruns are byte-identical") {
    TempDir dir;
    std::ofstream(dir / "profile.txt") << "8000 0.9\n8000 0.55\n";
    REQUIRE(run("gen --profile " + (dir / "profile.txt") + " --seed 8 --out " +
                (dir / "train.csv")) == 0);
    REQUIRE(run("gen --profile " + (dir / "profile.txt") + " --seed 9 --out " +
                (dir / "test.csv")) == 0);

    for (const char* prefix : {"c1", "c2"})
        REQUIRE(run("compare --train " + (dir / "train.csv") + " --test " +
                    (dir / "test.csv") + " --out " + (dir / prefix) + kSmall) == 0);
    CHECK(file_bytes(dir / "c1.table.csv") == file_bytes(dir / "c2.table.csv"));
    CHECK(file_bytes(dir / "c1.model.json") == file_bytes(dir / "c2.model.json"));
    CHECK(file_bytes(dir / "c1.elc.json") == file_bytes(dir / "c2.elc.json"));
}

TEST_CASE("unreadable input gives exit 3") {
    TempDir dir;
    CHECK(run("fit --train " + (dir / "missing.csv") + " --out " +
              (dir / "m.json")) == 3);
}
