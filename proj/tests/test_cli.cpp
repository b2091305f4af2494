#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    std::string cmd = std::string(BORUTA_CLI_PATH) + " " + args +
                      " >cli_stdout.txt 2>cli_stderr.txt";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t count_lines(const std::string& text) {
    std::size_t n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("synth writes header + n rows with 51 columns") {
    TempDir dir("cli_synth");
    auto out = (dir.path / "d.csv").string();
    REQUIRE(run_cli("synth --variant direct --n 200 --seed 7 --out " + out) ==
            0);
    auto text = slurp(out);
    CHECK(count_lines(text) == 201);
    std::string header = text.substr(0, text.find('\n'));
    CHECK(std::count(header.begin(), header.end(), ',') == 50);
    CHECK(header.rfind("feature-1,", 0) == 0);
    CHECK(fs::exists(out + ".manifest.json"));

    // byte-identical rerun
    auto out2 = (dir.path / "d2.csv").string();
    REQUIRE(run_cli("synth --variant direct --n 200 --seed 7 --out " + out2) ==
            0);
    CHECK(slurp(out) == slurp(out2));
}

TEST_CASE("synth usage errors exit 1") {
    CHECK(run_cli("synth --n 0 --out x.csv") == 1);
    CHECK(run_cli("synth --variant nope --n 10 --out x.csv") == 1);
    CHECK(run_cli("unknowncmd") == 1);
}

TEST_CASE("select end to end on a small dataset") {
    TempDir dir("cli_select");
    auto data = (dir.path / "d.csv").string();
    REQUIRE(run_cli("synth --variant direct --n 400 --seed 3 --out " + data) ==
            0);

    auto out_dir = (dir.path / "sel").string();
    REQUIRE(run_cli("select --data " + data +
                    " --target target --method treeimp --seeds 2 --seed 10"
                    " --trees 20 --max-iter 8 --jobs 2 --out-dir " +
                    out_dir) == 0);
    CHECK(fs::exists(out_dir + "/report_10.json"));
    CHECK(fs::exists(out_dir + "/report_11.json"));
    CHECK(fs::exists(out_dir + "/history_10.csv"));
    CHECK(fs::exists(out_dir + "/aggregate.json"));
    CHECK(fs::exists(out_dir + "/manifest.json"));

    auto report = nlohmann::json::parse(slurp(out_dir + "/report_10.json"));
    CHECK(report["seed"] == 10);
    CHECK(report["features"].size() == 50);
    CHECK(report["features"].contains("feature-27"));

    auto manifest = nlohmann::json::parse(slurp(out_dir + "/manifest.json"));
    CHECK(manifest["command"] == "select");
    CHECK(manifest["seeds"].size() == 2);
    CHECK(manifest["input_digests"].contains(data));
    CHECK(manifest["tool_version"] == "0.1.0");

    // reproducibility: rerun into a fresh dir, reports are byte-identical
    auto out_dir2 = (dir.path / "sel2").string();
    REQUIRE(run_cli("select --data " + data +
                    " --target target --method treeimp --seeds 2 --seed 10"
                    " --trees 20 --max-iter 8 --jobs 1 --out-dir " +
                    out_dir2) == 0);
    CHECK(slurp(out_dir + "/report_10.json") ==
          slurp(out_dir2 + "/report_10.json"));
    CHECK(slurp(out_dir + "/aggregate.json") ==
          slurp(out_dir2 + "/aggregate.json"));

    // report command on the produced histories
    auto box = (dir.path / "box.csv").string();
    REQUIRE(run_cli("report --history " + out_dir + "/history_10.csv " +
                    out_dir + "/history_11.csv --states " + out_dir +
                    "/aggregate.json --out " + box) == 0);
    auto text = slurp(box);
    CHECK(text.rfind("feature,min,q1,median,q3,max,state\n", 0) == 0);
    CHECK(count_lines(text) == 51);

    CHECK(run_cli("report --out " + box) == 1);  // no history files
}

TEST_CASE("select rejects unknown method with usage error") {
    TempDir dir("cli_method");
    auto data = (dir.path / "d.csv").string();
    REQUIRE(run_cli("synth --variant direct --n 50 --seed 1 --out " + data) ==
            0);
    CHECK(run_cli("select --data " + data +
                  " --method shapley --out-dir " + dir.path.string()) == 1);
    CHECK(slurp("cli_stderr.txt").find("treeimp") != std::string::npos);
}

TEST_CASE("eval with all features and with a subset") {
    TempDir dir("cli_eval");
    auto data = (dir.path / "d.csv").string();
    REQUIRE(run_cli("synth --variant direct --n 300 --seed 5 --out " + data) ==
            0);

    auto out = (dir.path / "metrics.json").string();
    REQUIRE(run_cli("eval --data " + data +
                    " --target target --features all --k 3 --trees 10 --out " +
                    out) == 0);
    auto j = nlohmann::json::parse(slurp(out));
    CHECK(j["task"] == "regression");
    CHECK(j["folds"] == 3);
    CHECK(j.contains("mse"));
    CHECK(j["manifest"]["command"] == "eval");

    // subset from a feature file
    auto feats = (dir.path / "feats.txt").string();
    {
        std::ofstream f(feats);
        f << "feature-27\nfeature-49\nfeature-31\n";
    }
    auto out2 = (dir.path / "metrics2.json").string();
    REQUIRE(run_cli("eval --data " + data + " --target target --features " +
                    feats + " --k 3 --trees 10 --out " + out2) == 0);

    // unknown feature name -> data error, named in the message
    {
        std::ofstream f(feats);
        f << "feature-99\n";
    }
    CHECK(run_cli("eval --data " + data + " --target target --features " +
                  feats + " --k 3 --out " + out2) == 2);
    CHECK(slurp("cli_stderr.txt").find("feature-99") != std::string::npos);

    // k=1 is a usage error
    CHECK(run_cli("eval --data " + data +
                  " --target target --k 1 --out " + out2) == 1);
}

TEST_CASE("data errors exit 2") {
    CHECK(run_cli("select --data no_such.csv --method treeimp") == 2);

    TempDir dir("cli_badcsv");
    auto bad = (dir.path / "bad.csv").string();
    {
        std::ofstream f(bad);
        f << "a,target\n1,2\nNA,4\n";
    }
    CHECK(run_cli("select --data " + bad + " --method treeimp --out-dir " +
                  dir.path.string()) == 2);
}

TEST_CASE("bench produces the documented csv") {
    TempDir dir("cli_bench");
    auto out = (dir.path / "bench.csv").string();
    REQUIRE(run_cli("bench --sizes 200x10,200x20 --method treeimp --trees 10 "
                    "--out " +
                    out) == 0);
    auto text = slurp(out);
    CHECK(text.rfind("n,p,trees,avg_depth,fit_s,importance_s,total_s\n", 0) ==
          0);
    CHECK(count_lines(text) == 3);
    CHECK(run_cli("bench --sizes bogus --method treeimp --out " + out) == 1);
}

TEST_CASE("config file supplies defaults, flags override") {
    TempDir dir("cli_config");
    auto data = (dir.path / "d.csv").string();
    REQUIRE(run_cli("synth --variant direct --n 60 --seed 2 --out " + data) ==
            0);

    auto cfg = (dir.path / "run.cfg").string();
    {
        std::ofstream f(cfg);
        f << "trees=12\nmax-iter=3\n";
    }
    auto out_dir = (dir.path / "sel").string();
    REQUIRE(run_cli("select --config " + cfg + " --data " + data +
                    " --method treeimp --out-dir " + out_dir) == 0);
    auto manifest = nlohmann::json::parse(slurp(out_dir + "/manifest.json"));
    auto resolved = manifest["resolved_config"].get<std::string>();
    CHECK(resolved.find("trees=12") != std::string::npos);
}
