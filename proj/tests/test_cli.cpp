#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kBinary = ENROLLREC_CLI;

int run(const std::string& args) {
    const std::string cmd = kBinary.string() + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

fs::path small_config(const fs::path& dir) {
    nlohmann::json j = {{"synth", {{"students", 300}}},
                        {"skipgram", {{"dimension", 8}, {"epochs", 1}}},
                        {"lstm", {{"hidden", 8}, {"epochs", 1}}}};
    auto p = dir / "config.json";
    std::ofstream(p) << j.dump();
    return p;
}

}  // namespace

TEST_CASE("cli: usage and unknown commands") {
    CHECK(run("") == 2);
    CHECK(run("frobnicate") != 0);
    CHECK(run("evaluate --no-such-flag") != 0);
    CHECK(run("--help") == 0);
}

TEST_CASE("cli: synth is reproducible for a seed") {
    TempDir tmp("enrollrec_cli_synth");
    auto cfg = small_config(tmp.path);
    const auto a = tmp.path / "a", b = tmp.path / "b", c = tmp.path / "c";
    REQUIRE(run("synth --seed 7 --config " + cfg.string() + " --output " + a.string()) == 0);
    REQUIRE(run("synth --seed 7 --config " + cfg.string() + " --output " + b.string()) == 0);
    REQUIRE(run("synth --seed 8 --config " + cfg.string() + " --output " + c.string()) == 0);
    for (const char* f : {"enrollments.csv", "catalog.csv", "equivalencies.csv", "majors.csv", "truth.json"}) {
        CAPTURE(f);
        CHECK(!slurp(a / f).empty());
        CHECK(slurp(a / f) == slurp(b / f));
    }
    CHECK(slurp(a / "enrollments.csv") != slurp(c / "enrollments.csv"));
}

TEST_CASE("cli: train and evaluate end to end") {
    TempDir tmp("enrollrec_cli_eval");
    auto cfg = small_config(tmp.path);
    const auto data = tmp.path / "data";
    const auto model = tmp.path / "lstm.bin";
    const auto report = tmp.path / "report.csv";
    // config through the environment variable
    ::setenv("ENROLLREC_CONFIG", cfg.string().c_str(), 1);
    REQUIRE(run("synth --output " + data.string()) == 0);
    REQUIRE(run("train-lstm --data " + data.string() + " --output " + model.string()) == 0);
    REQUIRE(run("evaluate --data " + data.string() + " --model " + model.string() +
                " --test-semester \"Fall 6\" --output " + report.string()) == 0);
    ::unsetenv("ENROLLREC_CONFIG");

    std::istringstream in(slurp(report));
    std::string line;
    std::getline(in, line);
    CHECK(line == "student_id,recall,rr,prior_semesters,major,college");
    std::size_t rows = 0;
    while (std::getline(in, line)) rows += !line.empty();
    CHECK(rows > 50);

    CHECK(run("evaluate --data " + data.string() + " --config " + cfg.string() + " --baseline popularity --output " +
              (tmp.path / "pop.csv").string()) == 0);
    CHECK(fs::exists(tmp.path / "pop.csv"));
    // missing model file is a structured error, not a crash
    CHECK(run("evaluate --data " + data.string() + " --config " + cfg.string() + " --model " +
              (tmp.path / "none.bin").string()) == 1);
    CHECK(run("train-lstm --data " + (tmp.path / "missing").string() + " --config " + cfg.string()) == 1);
}
