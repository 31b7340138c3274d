#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "kslab/cli.hpp"
#include "kslab/io.hpp"

namespace fs = std::filesystem;
using kslab::io::Json;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = kslab::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("kslab_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write(const fs::path& p, const Json& j) { std::ofstream(p) << j.dump(2); }

Json homogeneous(double value) {
    return {{"schema_version", 1},
            {"dim", 3},
            {"output_dir", "unused"},
            {"grid", {{"type", "uniform"}, {"r_max", 1.0}, {"intervals", 32}}},
            {"initial", {{"family", "constant"}, {"value", value}}},
            {"solver", {{"outer_boundary", "neumann"}}}};
}

Json blowup_config() {
    return {{"schema_version", 1},
            {"dim", 3},
            {"output_dir", "unused"},
            {"grid", {{"type", "log"}, {"r_max", 8.0}, {"intervals", 400}, {"h_min_fraction", 1e-5}}},
            {"initial", {{"family", "gaussian"}, {"amplitude", 20.0}, {"sigma", 1.0}}},
            {"solver", {{"blowup_threshold", 1e7}}}};
}

int shell(const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const std::string exe{KSLAB_CLI_PATH};

}  // namespace

TEST_CASE("usage errors exit 64") {
    CHECK(cli({}).code == kslab::cli::Usage);
    CHECK(cli({"bogus"}).code == kslab::cli::Usage);
    CHECK(cli({"profile"}).code == kslab::cli::Usage);
    CHECK(cli({"profile", "--m", "-1"}).code == kslab::cli::Usage);
    CHECK(cli({"profile", "--m", "1", "--dim", "2"}).code == kslab::cli::Usage);
    CHECK(cli({"profile", "--m", "abc"}).code == kslab::cli::Usage);
    CHECK(cli({"report", "x", "--window", "1"}).code == kslab::cli::Usage);
    const Result v = cli({"--version"});
    CHECK(v.code == kslab::cli::Ok);
    CHECK(v.out.find(kslab::io::version()) != std::string::npos);
}

TEST_CASE("profile writes csv and sidecar, deterministically") {
    TempDir a, b;
    const Result r = cli({"profile", "--m", "1", "2", "--dim", "3", "--out", a.path.string()});
    CHECK(r.code == kslab::cli::Ok);
    const Json side = kslab::io::read_json(a.path / "profile_m1_N3.json");
    CHECK(side.at("classification") == "TouchesZero");
    CHECK(kslab::io::read_json(a.path / "profile_m2_N3.json").at("classification") == "Unbounded");
    CHECK(cli({"profile", "--m", "2", "1", "--dim", "3", "--threads", "1", "--out", b.path.string()}).code == 0);
    for (const char* f : {"profile_m1_N3.csv", "profile_m2_N3.csv", "profile_m1_N3.json"})
        CHECK(slurp(a.path / f) == slurp(b.path / f));
}

TEST_CASE("an indeterminate profile exits 2") {
    TempDir d;
    const Result r = cli({"profile", "--m", "4", "--dim", "3", "--out", d.path.string()});
    CHECK(r.code == kslab::cli::Inconclusive);
    CHECK(fs::exists(d.path / "profile_m4_N3.csv"));
}

TEST_CASE("simulate reports missing and invalid configs") {
    TempDir d;
    CHECK(cli({"simulate", d / "none.json"}).code == kslab::cli::MissingInput);
    Json bad = homogeneous(10.0);
    bad["grid"]["intervals"] = 2;
    bad["dim"] = 2;
    write(d.path / "bad.json", bad);
    const Result r = cli({"simulate", d / "bad.json"});
    CHECK(r.code == kslab::cli::SchemaError);
    CHECK(r.err.find("/dim") != std::string::npos);
    CHECK(r.err.find("/grid/intervals") != std::string::npos);
    const std::string text = slurp(d.path / "bad.json");
    const auto dim_line = 1 + std::count(text.begin(), text.begin() + text.find("\"dim\""), '\n');
    CHECK(r.err.find("bad.json:" + std::to_string(dim_line) + ": /dim") != std::string::npos);
}

TEST_CASE("homogeneous data blow up at 1/u0") {
    TempDir d;
    write(d.path / "h.json", homogeneous(10.0));
    const Result r = cli({"simulate", d / "h.json", "--out", d / "run"});
    CHECK(r.code == kslab::cli::Ok);
    const Json meta = kslab::io::read_json(d.path / "run/run.json");
    CHECK(meta.at("termination") == "BlowupDetected");
    CHECK(meta.at("T_est").get<double>() == doctest::Approx(0.1).epsilon(1e-3));
    CHECK(meta.at("mass_drift").is_null());
    CHECK(fs::exists(d.path / "run/supnorm.csv"));
    CHECK(fs::exists(d.path / "run/snapshots/snap_00000.csv"));
}

TEST_CASE("blow-up pipeline: simulate, intersect, report") {
    TempDir d;
    write(d.path / "g.json", blowup_config());
    REQUIRE(cli({"simulate", d / "g.json", "--out", d / "run"}).code == kslab::cli::Ok);
    const Json meta = kslab::io::read_json(d.path / "run/run.json");
    REQUIRE(meta.at("T_est").is_number());

    const Result i = cli({"intersect", d / "run", "--m", "1", "3"});
    CHECK(i.code == kslab::cli::Ok);
    CHECK(fs::exists(d.path / "run/intersections_m1.csv"));
    const Json verdict = kslab::io::read_json(d.path / "run/intersections.json");
    CHECK(verdict.dump().find("pass") != std::string::npos);

    const Result rep = cli({"report", d / "run", "--out", d / "rep"});
    CHECK((rep.code == kslab::cli::Ok || rep.code == kslab::cli::Inconclusive));
    const Json report = kslab::io::read_json(d.path / "rep/report.json");
    CHECK(report.at("alpha_from_U").is_number());
    CHECK(report.at("alpha_from_W").is_number());
    const auto W = kslab::io::read_csv(d.path / "rep/profile_W.csv");
    CHECK(W.columns == std::vector<std::string>{"r", "value", "r2value"});

    CHECK(cli({"report", d / "run", "--window", "0.1", "0.2"}).code == kslab::cli::Usage);
    CHECK(cli({"report", d / "nowhere"}).code == kslab::cli::MissingInput);
    CHECK(cli({"intersect", d / "nowhere"}).code == kslab::cli::MissingInput);
}

TEST_CASE("intersect without a blow-up time is inconclusive") {
    TempDir d;
    Json c = homogeneous(1.0);
    c["solver"]["time_cap"] = 0.01;
    write(d.path / "c.json", c);
    CHECK(cli({"simulate", d / "c.json", "--out", d / "run"}).code == kslab::cli::Ok);
    CHECK(cli({"intersect", d / "run", "--m", "1"}).code == kslab::cli::Inconclusive);
    CHECK(cli({"intersect", d / "run", "--m", "1", "--T", "1.0"}).code != kslab::cli::Usage);
    CHECK(cli({"intersect", d / "run", "--against", d / "run"}).code == kslab::cli::Ok);
}

TEST_CASE("sweep runs every point and does not depend on the thread count") {
    TempDir d;
    for (int threads : {1, 3}) {
        const Json spec = {{"base", homogeneous(1.0)},
                           {"parameter", "/initial/value"},
                           {"values", {5.0, 10.0, 20.0}},
                           {"output_dir", d / ("s" + std::to_string(threads))}};
        write(d.path / "sweep.json", spec);
        CHECK(cli({"sweep", d / "sweep.json", "--threads", std::to_string(threads)}).code == kslab::cli::Ok);
    }
    const std::string one = slurp(d.path / "s1/sweep.csv");
    CHECK(one == slurp(d.path / "s3/sweep.csv"));
    std::istringstream lines(one);
    std::string line;
    std::getline(lines, line);
    std::getline(lines, line);
    CHECK(line == "index,value,termination,T_est,final_time,steps,mass_drift");
    int rows = 0;
    while (std::getline(lines, line)) {
        std::vector<std::string> cells;
        std::istringstream cs(line);
        for (std::string c; std::getline(cs, c, ',');) cells.push_back(c);
        REQUIRE(cells.size() == 7);
        CHECK(cells[2] == "BlowupDetected");
        CHECK(std::stod(cells[3]) == doctest::Approx(1.0 / std::stod(cells[1])).epsilon(1e-2));
        ++rows;
    }
    CHECK(rows == 3);
    CHECK(fs::exists(d.path / "s1/point_2/run.json"));
}

TEST_CASE("random sweeps are reproducible from the base seed") {
    TempDir d;
    Json base = homogeneous(1.0);
    base["seed"] = 7;
    for (const char* name : {"a", "b"}) {
        write(d.path / "sweep.json", Json{{"base", base},
                                         {"parameter", "/initial/value"},
                                         {"random", {{"lo", 5.0}, {"hi", 20.0}, {"count", 2}}},
                                         {"output_dir", d / name}});
        CHECK(cli({"sweep", d / "sweep.json"}).code == kslab::cli::Ok);
    }
    CHECK(slurp(d.path / "a/sweep.csv") == slurp(d.path / "b/sweep.csv"));
}

TEST_CASE("sweep errors") {
    TempDir d;
    CHECK(cli({"sweep", d / "none.json"}).code == kslab::cli::MissingInput);
    write(d.path / "s.json", Json{{"base", homogeneous(1.0)}, {"parameter", "/initial/value"}});
    CHECK(cli({"sweep", d / "s.json"}).code == kslab::cli::SchemaError);
    write(d.path / "s.json",
          Json{{"base", homogeneous(1.0)}, {"parameter", "/nope/value"}, {"values", {1.0}}});
    CHECK(cli({"sweep", d / "s.json"}).code == kslab::cli::SchemaError);
    write(d.path / "s.json",
          Json{{"base", homogeneous(1.0)}, {"parameter", "/dim"}, {"values", {2.0}}, {"output_dir", d / "o"}});
    CHECK(cli({"sweep", d / "s.json"}).code == kslab::cli::SchemaError);
}

TEST_CASE("the installed binary honours KSLAB_THREADS") {
    TempDir d;
    const std::string quiet = " > /dev/null 2>&1";
    CHECK(shell(exe + " --version" + quiet) == 0);
    CHECK(shell("KSLAB_THREADS=abc " + exe + " profile --m 1 --out " + d.path.string() + quiet) == 64);
    CHECK(shell("KSLAB_THREADS=0 " + exe + " profile --m 1 --out " + d.path.string() + quiet) == 64);
    CHECK(shell("KSLAB_THREADS=1 " + exe + " profile --m 1 --out " + d.path.string() + quiet) == 0);
    CHECK(shell(exe + " simulate " + d.path.string() + "/missing.json" + quiet) == 66);
}
