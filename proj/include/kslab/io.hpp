#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kslab/analysis.hpp"
#include "kslab/profile.hpp"
#include "kslab/solver.hpp"
#include "kslab/zeronum.hpp"

// CSV and JSON artifacts. Every CSV starts with "# kslab <version>" and
// stores numbers with 17 significant digits, so files round-trip exactly.
namespace kslab::io {

namespace fs = std::filesystem;
using Json = nlohmann::json;

std::string version();
std::string format_double(double v);

// Finite doubles as numbers, everything else as null.
Json number_or_null(double v);
Json number_or_null(const std::optional<double>& v);

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

void write_csv(const fs::path& path, const Table& t);
// Errors: unreadable file -> Io; malformed content -> Schema.
Table read_csv(const fs::path& path);

void write_json(const fs::path& path, const Json& j);
Json read_json(const fs::path& path);

// r,value[,t] (t repeated on every row when the field carries a time).
void write_field(const fs::path& path, const RadialField& f);
RadialField read_field(const fs::path& path);

void write_grid(const fs::path& path, const RadialGrid& g);
RadialGrid read_grid(const fs::path& path);

Json profile_sidecar(const SelfSimilarProfile& p);
// Writes <stem>.csv (xi,phi) and <stem>.json.
void write_profile(const fs::path& stem, const SelfSimilarProfile& p);

void write_series(const fs::path& path, const ZeroCountSeries& s);
Json series_verdict(const ZeroCountSeries& s);

struct RunSummary {
    std::optional<BlowupEstimate> estimate;
    std::string estimate_error;  // reason when no estimate is available
};

// Directory layout: run.json, grid.json, supnorm.csv, snapshots/snap_NNNNN.csv.
void write_run(const fs::path& dir, const BlowupRun& run, const RunSummary& summary,
               const Json& config = Json());

struct LoadedRun {
    BlowupRun run;
    Json meta;               // run.json
    std::optional<double> T_est;
};

// Errors: missing directory or files -> Io.
LoadedRun read_run(const fs::path& dir);

// report.json plus profile_W.csv and profile_U.csv with r,value,r2value.
void write_report(const fs::path& dir, const ProfileReport& rep);
Json report_json(const ProfileReport& rep);

}  // namespace kslab::io
