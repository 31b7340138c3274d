#include "kslab/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "kslab/error.hpp"

#ifndef KSLAB_VERSION
#define KSLAB_VERSION "0.0.0"
#endif

namespace kslab::io {

namespace {

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    return out;
}

double parse_number(const std::string& cell, const fs::path& path, std::size_t line) {
    // strtod rather than stod: subnormals set ERANGE but parse exactly
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    const auto used = static_cast<std::size_t>(end - cell.c_str());
    if (cell.empty() || std::isspace(static_cast<unsigned char>(cell.front())) || used != cell.size())
        throw Error(ErrorCode::Schema, path.string() + ":" + std::to_string(line) + ": not a number: '" + cell + "'");
    return v;
}

std::string snapshot_name(std::size_t k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "snap_%05zu.csv", k);
    return buf;
}

}  // namespace

std::string version() { return KSLAB_VERSION; }

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }
Json number_or_null(const std::optional<double>& v) { return v ? number_or_null(*v) : Json(nullptr); }

void write_csv(const fs::path& path, const Table& t) {
    std::ofstream out = open_out(path);
    out << "# kslab " << version() << "\n";
    for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << t.columns[c];
    out << "\n";
    for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_double(row[c]);
        out << "\n";
    }
    if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

Table read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    Table t;
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!header) {
            t.columns = cells;
            header = true;
            continue;
        }
        if (cells.size() != t.columns.size())
            throw Error(ErrorCode::Schema, path.string() + ":" + std::to_string(lineno) + ": expected " +
                                               std::to_string(t.columns.size()) + " columns");
        std::vector<double> row;
        for (const auto& c : cells) row.push_back(parse_number(c, path, lineno));
        t.rows.push_back(std::move(row));
    }
    if (!header) throw Error(ErrorCode::Schema, path.string() + ": no header line");
    return t;
}

void write_json(const fs::path& path, const Json& j) {
    std::ofstream out = open_out(path);
    out << j.dump(2) << "\n";
    if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

Json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::Schema, path.string() + ": " + e.what());
    }
}

void write_field(const fs::path& path, const RadialField& f) {
    Table t;
    t.columns = {"r", "value"};
    if (f.time()) t.columns.push_back("t");
    const auto r = f.grid().nodes();
    for (std::size_t i = 0; i < f.size(); ++i) {
        std::vector<double> row{r[i], f[i]};
        if (f.time()) row.push_back(*f.time());
        t.rows.push_back(std::move(row));
    }
    write_csv(path, t);
}

RadialField read_field(const fs::path& path) {
    const Table t = read_csv(path);
    if (t.columns.size() < 2 || t.columns[0] != "r" || t.columns[1] != "value")
        throw Error(ErrorCode::Schema, path.string() + ": expected columns r,value[,t]");
    std::vector<double> r, v;
    for (const auto& row : t.rows) {
        r.push_back(row[0]);
        v.push_back(row[1]);
    }
    std::optional<double> time;
    if (t.columns.size() > 2 && !t.rows.empty()) time = t.rows.front()[2];
    return RadialField(make_grid(RadialGrid::from_nodes(std::move(r))), std::move(v), time);
}

void write_grid(const fs::path& path, const RadialGrid& g) {
    write_json(path, Json{{"nodes", std::vector<double>(g.nodes().begin(), g.nodes().end())}});
}

RadialGrid read_grid(const fs::path& path) {
    const Json j = read_json(path);
    if (!j.contains("nodes") || !j["nodes"].is_array()) throw Error(ErrorCode::Schema, path.string() + ": no nodes");
    return RadialGrid::from_nodes(j["nodes"].get<std::vector<double>>());
}

Json profile_sidecar(const SelfSimilarProfile& p) {
    return Json{{"m", p.m},
                {"N", p.dim},
                {"ell", number_or_null(p.ell)},
                {"classification", to_string(p.classification)},
                {"tail_error", number_or_null(p.tail_error())},
                {"extension_value", number_or_null(p.extension_value)},
                {"tail_a", number_or_null(p.tail_a)},
                {"diagnostics", p.diagnostics},
                {"version", version()}};
}

void write_profile(const fs::path& stem, const SelfSimilarProfile& p) {
    Table t;
    t.columns = {"xi", "phi"};
    for (std::size_t i = p.xi.size(); i-- > 0;) t.rows.push_back({p.xi[i], p.phi[i]});
    fs::path csv = stem, json = stem;
    csv += ".csv";
    json += ".json";
    write_csv(csv, t);
    write_json(json, profile_sidecar(p));
}

void write_series(const fs::path& path, const ZeroCountSeries& s) {
    Table t;
    t.columns = {"t", "count", "ambiguous"};
    for (const auto& e : s.entries)
        t.rows.push_back({e.t, static_cast<double>(e.count), static_cast<double>(e.ambiguous)});
    write_csv(path, t);
}

Json series_verdict(const ZeroCountSeries& s) {
    return Json{{"pass", s.pass},
                {"increases", s.increases},
                {"ambiguous_total", s.ambiguous_total},
                {"tails_one_signed", s.tails_one_signed},
                {"entries", s.entries.size()}};
}

void write_run(const fs::path& dir, const BlowupRun& run, const RunSummary& summary, const Json& config) {
    fs::create_directories(dir / "snapshots");
    for (const auto& old : fs::directory_iterator(dir / "snapshots"))
        if (old.path().extension() == ".csv") fs::remove(old.path());
    for (std::size_t k = 0; k < run.snapshots.size(); ++k)
        write_field(dir / "snapshots" / snapshot_name(k), run.snapshots[k].w);
    Table sup;
    sup.columns = {"t", "supnorm"};
    for (const auto& s : run.supnorm_history) sup.rows.push_back({s.t, s.supnorm});
    write_csv(dir / "supnorm.csv", sup);
    const RadialGrid& g = run.snapshots.empty() ? *run.config.grid : run.snapshots.back().w.grid();
    write_grid(dir / "grid.json", g);

    Json meta{{"version", version()},
              {"N", run.config.dim.value()},
              {"termination", to_string(run.termination)},
              {"message", run.message},
              {"steps", run.steps},
              {"final_time", run.snapshots.empty() ? Json(nullptr) : number_or_null(run.final_time())},
              {"snapshots", run.snapshots.size()},
              {"initial_mass", number_or_null(run.initial_mass)},
              {"mass_drift", run.config.outer == OuterBoundary::ZeroDensity ? number_or_null(run.mass_drift) : Json(nullptr)},
              {"clamped_total", run.clamped_total},
              {"positivity_warning", run.positivity_warning},
              {"regridded", run.regridded},
              {"outer_boundary", to_string(run.config.outer)}};
    if (summary.estimate) {
        meta["T_est"] = number_or_null(summary.estimate->T_est);
        meta["fit_residual"] = number_or_null(summary.estimate->fit_residual);
        meta["rate_constant"] = number_or_null(summary.estimate->rate_constant);
        meta["fit_samples"] = summary.estimate->samples_used;
    } else {
        meta["T_est"] = nullptr;
        meta["fit_residual"] = nullptr;
        meta["estimate_error"] = summary.estimate_error;
    }
    if (!run.config.snapshot_radii.empty()) {
        meta["snapshot_radii"] = run.config.snapshot_radii;
        meta["probe_u"] = run.probe_u;
    }
    if (!config.is_null()) meta["config"] = config;
    write_json(dir / "run.json", meta);
}

LoadedRun read_run(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, "no run directory " + dir.string());
    LoadedRun out;
    out.meta = read_json(dir / "run.json");
    const Json& m = out.meta;
    BlowupRun& run = out.run;
    run.config.dim = Dimension(m.at("N").get<int>());
    run.config.grid = make_grid(read_grid(dir / "grid.json"));
    const std::string term = m.value("termination", std::string());
    for (Termination t : {Termination::BlowupDetected, Termination::TimeCap, Termination::SteadyState,
                          Termination::StepFailed})
        if (to_string(t) == term) run.termination = t;
    run.steps = m.value("steps", std::size_t{0});
    run.message = m.value("message", std::string());
    if (m.contains("mass_drift") && m["mass_drift"].is_number()) run.mass_drift = m["mass_drift"].get<double>();
    if (m.contains("initial_mass") && m["initial_mass"].is_number()) run.initial_mass = m["initial_mass"].get<double>();
    if (m.contains("T_est") && m["T_est"].is_number()) out.T_est = m["T_est"].get<double>();

    const Table sup = read_csv(dir / "supnorm.csv");
    for (const auto& row : sup.rows) run.supnorm_history.push_back({row.at(0), row.at(1)});

    std::vector<fs::path> files;
    if (fs::is_directory(dir / "snapshots"))
        for (const auto& e : fs::directory_iterator(dir / "snapshots"))
            if (e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error(ErrorCode::Io, "run directory has no snapshots: " + dir.string());
    std::map<std::vector<double>, GridPtr> grids;
    for (const fs::path& f : files) {
        RadialField field = read_field(f);
        if (!field.time()) throw Error(ErrorCode::Schema, f.string() + ": snapshot without t column");
        std::vector<double> nodes(field.grid().nodes().begin(), field.grid().nodes().end());
        GridPtr& g = grids[nodes];
        if (!g) g = *run.config.grid == field.grid() ? run.config.grid : make_grid(RadialGrid(field.grid()));
        std::vector<double> values(field.values().begin(), field.values().end());
        const double t = *field.time();
        run.snapshots.push_back({t, RadialField(g, std::move(values), t)});
    }
    return out;
}

Json report_json(const ProfileReport& rep) {
    Json reg{{"c4", number_or_null(rep.regularity.c4)},
             {"c3", number_or_null(rep.regularity.c3)},
             {"c4_per_snapshot", rep.regularity.c4_per_snapshot},
             {"c3_per_snapshot", rep.regularity.c3_per_snapshot}};
    double worst_residual = 0.0;
    for (double r : rep.W_residual) worst_residual = std::max(worst_residual, r);
    return Json{{"version", version()},
                {"T", number_or_null(rep.T)},
                {"window", {rep.window_lo, rep.window_hi}},
                {"alpha_from_U", number_or_null(rep.alpha_from_U)},
                {"alpha_from_W", number_or_null(rep.alpha_from_W)},
                {"plateau_ratio", number_or_null(rep.plateau_ratio)},
                {"mismatch", number_or_null(rep.mismatch)},
                {"converged", rep.converged},
                {"regularity", reg},
                {"typeB_cauchy", number_or_null(rep.typeB_cauchy)},
                {"max_W_residual", worst_residual}};
}

void write_report(const fs::path& dir, const ProfileReport& rep) {
    fs::create_directories(dir);
    write_json(dir / "report.json", report_json(rep));
    Table w, u;
    w.columns = u.columns = {"r", "value", "r2value"};
    for (std::size_t i = 0; i < rep.radii.size(); ++i) {
        const double r2 = rep.radii[i] * rep.radii[i];
        w.rows.push_back({rep.radii[i], rep.W_values[i], r2 * rep.W_values[i]});
        u.rows.push_back({rep.radii[i], rep.U_values[i], r2 * rep.U_values[i]});
    }
    write_csv(dir / "profile_W.csv", w);
    write_csv(dir / "profile_U.csv", u);
}

}  // namespace kslab::io
