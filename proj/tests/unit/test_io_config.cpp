#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <unistd.h>
#include <sstream>

#include "kslab/config.hpp"
#include "kslab/io.hpp"

using namespace kslab;
namespace fs = std::filesystem;

namespace {

std::optional<ErrorCode> code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return std::nullopt;
}

std::string message_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("kslab_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const fs::path source_dir{KSLAB_SOURCE_DIR};

Json small_config() {
    return Json::parse(R"({
      "schema_version": 1, "dim": 3, "output_dir": "o",
      "grid": {"type": "log", "r_max": 8.0, "intervals": 64},
      "initial": {"family": "gaussian", "amplitude": 5.0, "sigma": 1.0},
      "solver": {"time_cap": 0.05}
    })");
}

}  // namespace

TEST_CASE("csv round-trips doubles bit for bit") {
    TempDir tmp;
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    io::Table t{{"a", "b", "c"}, {}};
    for (int i = 0; i < 50; ++i) t.rows.push_back({u(gen) * std::pow(10.0, i % 40 - 20), u(gen), 1.0 / (i + 1)});
    t.rows.push_back({std::numeric_limits<double>::denorm_min(), -0.0, 1e308});
    io::write_csv(tmp.path / "t.csv", t);
    const io::Table back = io::read_csv(tmp.path / "t.csv");
    CHECK(back.columns == t.columns);
    REQUIRE(back.rows.size() == t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(back.rows[i][j] == t.rows[i][j]);
    CHECK(slurp(tmp.path / "t.csv").rfind("# kslab " + io::version(), 0) == 0);
}

TEST_CASE("csv read errors") {
    TempDir tmp;
    CHECK(code_of([&] { io::read_csv(tmp.path / "absent.csv"); }) == ErrorCode::Io);
    std::ofstream(tmp.path / "ragged.csv") << "a,b\n1,2\n3\n";
    CHECK(code_of([&] { io::read_csv(tmp.path / "ragged.csv"); }) == ErrorCode::Schema);
    std::ofstream(tmp.path / "text.csv") << "a,b\n1,x\n";
    CHECK(code_of([&] { io::read_csv(tmp.path / "text.csv"); }) == ErrorCode::Schema);
    std::ofstream(tmp.path / "bad.json") << "{\"a\": ";
    CHECK(code_of([&] { io::read_json(tmp.path / "bad.json"); }) == ErrorCode::Schema);
}

TEST_CASE("fields and grids round-trip") {
    TempDir tmp;
    const RadialGrid grid = RadialGrid::log_graded(8.0, 100, 1e-4);
    io::write_grid(tmp.path / "g.json", grid);
    const RadialGrid back = io::read_grid(tmp.path / "g.json");
    CHECK(back == grid);

    auto g = make_grid(grid);
    InitialData data{Gaussian{3.0, 0.7}};
    RadialField f = build_initial(data, g);
    f.set_time(0.125);
    io::write_field(tmp.path / "f.csv", f);
    const RadialField fb = io::read_field(tmp.path / "f.csv");
    CHECK(fb.grid() == grid);
    CHECK(fb.time() == 0.125);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(fb[i] == f[i]);
}

TEST_CASE("profile sidecar writes null for non-finite values") {
    TempDir tmp;
    const SelfSimilarProfile p = build_profile(TailCoefficient(2.0), Dimension(3));
    const io::Json j = io::profile_sidecar(p);
    CHECK(j.at("m") == 2.0);
    CHECK(j.at("classification") == to_string(p.classification));
    CHECK(j.at("extension_value").is_null());
    io::write_profile(tmp.path / "p", p);
    const io::Table t = io::read_csv(tmp.path / "p.csv");
    CHECK(t.columns == std::vector<std::string>{"xi", "phi"});
    for (std::size_t i = 1; i < t.rows.size(); ++i) CHECK(t.rows[i][0] > t.rows[i - 1][0]);
    CHECK(io::read_json(tmp.path / "p.json") == j);
    CHECK(io::number_or_null(std::numeric_limits<double>::infinity()).is_null());
    CHECK(io::number_or_null(std::optional<double>{}).is_null());
}

TEST_CASE("run directories round-trip") {
    TempDir tmp;
    ExperimentConfig cfg = parse_config(small_config());
    cfg.solver.snapshot_radii = {0.5, 1.0};
    const BlowupRun r = run(cfg.solver, w_from_u(build_initial(cfg.initial, cfg.solver.grid), cfg.dim));
    io::RunSummary summary;
    summary.estimate_error = "no blow-up";
    io::write_run(tmp.path / "run", r, summary, cfg.raw);
    const io::LoadedRun back = io::read_run(tmp.path / "run");
    CHECK_FALSE(back.T_est);
    CHECK(back.meta.at("termination") == to_string(r.termination));
    CHECK(back.meta.at("config") == cfg.raw);
    CHECK(back.run.config.dim == r.config.dim);
    REQUIRE(back.run.snapshots.size() == r.snapshots.size());
    for (std::size_t k = 0; k < r.snapshots.size(); ++k) {
        CHECK(back.run.snapshots[k].t == r.snapshots[k].t);
        for (std::size_t i = 0; i < r.snapshots[k].w.size(); ++i)
            CHECK(back.run.snapshots[k].w[i] == r.snapshots[k].w[i]);
    }
    CHECK(back.run.supnorm_history.size() == r.supnorm_history.size());
    CHECK(code_of([&] { io::read_run(tmp.path / "missing"); }) == ErrorCode::Io);
}

TEST_CASE("the shipped configs parse") {
    for (const auto& entry : fs::directory_iterator(source_dir / "configs")) {
        const Json j = io::read_json(entry.path());
        if (j.contains("base")) continue;
        CAPTURE(entry.path().string());
        CHECK(validate_schema(j, experiment_schema()).empty());
        CHECK_NOTHROW(load_config(entry.path()));
    }
}

TEST_CASE("invalid configs are rejected by the schema or the semantic checks") {
    const fs::path root = source_dir / "tests/data/invalid_configs";
    std::size_t seen = 0;
    for (const auto& entry : fs::directory_iterator(root / "schema")) {
        CAPTURE(entry.path().string());
        CHECK_FALSE(validate_schema(io::read_json(entry.path()), experiment_schema()).empty());
        CHECK(code_of([&] { load_config(entry.path()); }) == ErrorCode::Schema);
        ++seen;
    }
    for (const auto& entry : fs::directory_iterator(root / "semantic")) {
        CAPTURE(entry.path().string());
        CHECK(validate_schema(io::read_json(entry.path()), experiment_schema()).empty());
        CHECK(code_of([&] { load_config(entry.path()); }) == ErrorCode::Schema);
        ++seen;
    }
    CHECK(seen >= 15);
}

TEST_CASE("schema errors carry file, line and pointer") {
    TempDir tmp;
    const fs::path p = tmp.path / "c.json";
    std::ofstream(p) << "{\n  \"schema_version\": 1,\n  \"dim\": 3,\n  \"output_dir\": \"o\",\n"
                        "  \"grid\": {\"type\": \"log\", \"r_max\": 8.0, \"intervals\": 64},\n"
                        "  \"initial\": {\n    \"family\": \"gaussian\",\n    \"amplitude\": \"x\"\n  }\n}\n";
    const std::string msg = message_of([&] { load_config(p); });
    CHECK(msg.find("c.json:8:") != std::string::npos);
    CHECK(msg.find("/initial/amplitude") != std::string::npos);

    std::ofstream(tmp.path / "broken.json") << "{\n  \"dim\": 3,\n  oops\n}\n";
    const std::string broken = message_of([&] { load_config(tmp.path / "broken.json"); });
    CHECK(broken.find("broken.json:3:") != std::string::npos);
    CHECK(code_of([&] { load_config(tmp.path / "nothing.json"); }) == ErrorCode::Io);
}

TEST_CASE("every violation is reported") {
    Json j = small_config();
    j["dim"] = 2;
    j["grid"]["intervals"] = 3;
    j["extra"] = true;
    const auto v = validate_schema(j, experiment_schema());
    CHECK(v.size() == 3);
    std::set<std::string> ptrs;
    for (const auto& e : v) ptrs.insert(e.pointer);
    CHECK(ptrs == std::set<std::string>{"/dim", "/grid/intervals", "/extra"});
}

TEST_CASE("validator keywords") {
    const Json s = Json::parse(R"({
      "type": "object", "required": ["a"], "additionalProperties": false,
      "properties": {
        "a": {"type": "array", "items": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
              "minItems": 1, "maxItems": 2},
        "b": {"type": "string", "minLength": 2},
        "c": {"enum": [1, "x"]},
        "d": {"type": "integer", "exclusiveMinimum": 0, "maximum": 5}
      }})");
    CHECK(validate_schema(Json::parse(R"({"a": [0.5]})"), s).empty());
    CHECK(validate_schema(Json::parse(R"({"a": [1.0]})"), s).size() == 1);
    CHECK(validate_schema(Json::parse(R"({"a": [-1]})"), s).size() == 1);
    CHECK(validate_schema(Json::parse(R"({"a": []})"), s).size() == 1);
    CHECK(validate_schema(Json::parse(R"({"a": [0, 0, 0]})"), s).size() == 1);
    CHECK(validate_schema(Json::parse(R"({})"), s).size() == 1);
    CHECK(validate_schema(Json::parse(R"({"a": [0], "b": "x"})"), s).size() == 1);
    CHECK(validate_schema(Json::parse(R"({"a": [0], "c": "x"})"), s).empty());
    CHECK(validate_schema(Json::parse(R"({"a": [0], "c": 2})"), s).size() == 1);
    CHECK(validate_schema(Json::parse(R"({"a": [0], "d": 0})"), s).size() == 1);
    CHECK(validate_schema(Json::parse(R"({"a": [0], "d": 6})"), s).size() == 1);
    CHECK(validate_schema(Json::parse(R"({"a": [0], "d": 2.5})"), s).size() == 1);
    CHECK(validate_schema(Json::parse(R"({"a": [0], "d": 3.0})"), s).empty());
    CHECK(validate_schema(Json::parse(R"({"a": [0], "z": 1})"), s).size() == 1);
}

TEST_CASE("parsed values reach the solver config") {
    Json j = small_config();
    j["solver"]["outer_boundary"] = "neumann";
    j["solver"]["dt_max"] = 1e-4;
    j["analysis"] = {{"window", {0.1, 1.0}}, {"snapshots", 5}};
    j["seed"] = 42;
    const ExperimentConfig c = parse_config(j);
    CHECK(c.solver.outer == OuterBoundary::Neumann);
    CHECK(c.solver.dt_max == 1e-4);
    CHECK(c.solver.time_cap == 0.05);
    CHECK(c.solver.grid->size() == 65);
    CHECK(c.analysis.window == std::pair{0.1, 1.0});
    CHECK(c.analysis.snapshots == 5);
    CHECK(c.seed == 42);
    CHECK(std::get<Gaussian>(c.initial.family).amplitude == 5.0);

    Json ann = small_config();
    ann["grid"] = {{"type", "annulus"}, {"r_min", 0.5}, {"r_max", 2.0}, {"intervals", 32}};
    ann["solver"]["outer_boundary"] = "dirichlet";
    ann["solver"]["outer_value"] = 0.5;
    ann["solver"]["inner_value"] = 8.0;
    const ExperimentConfig a = parse_config(ann);
    CHECK(a.solver.inner == InnerBoundary::Dirichlet);
    CHECK(a.solver.grid->r_min() == 0.5);
}

TEST_CASE("locate_pointer") {
    const std::string text = "{\n  \"a\": {\n    \"b\": [\n      1,\n      2\n    ]\n  },\n  \"c\": 3\n}";
    CHECK(locate_pointer(text, "/a") == 2);
    CHECK(locate_pointer(text, "/a/b") == 3);
    CHECK(locate_pointer(text, "/a/b/1") == 5);
    CHECK(locate_pointer(text, "/c") == 8);
    CHECK(locate_pointer(text, "") == 1);
    CHECK(locate_pointer(text, "/missing") == 0);
}
