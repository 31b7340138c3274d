#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kslab/radial.hpp"
#include "kslab/solver.hpp"

// Experiment configuration: JSON in, validated against schema/experiment.schema.json.
namespace kslab {

using Json = nlohmann::json;

struct GridSpec {
    std::string type = "log";  // uniform | log | annulus
    double r_max = 8.0;
    double r_min = 0.0;        // annulus only
    std::size_t intervals = 2000;
    double h_min_fraction = 1e-4;

    RadialGrid build() const;
};

struct AnalysisSettings {
    std::optional<std::pair<double, double>> window;
    double radii_lo = 0.0;  // 0 -> derived from the grid
    double radii_hi = 0.0;
    std::size_t radii_count = 400;
    std::size_t snapshots = 4;
    std::pair<double, double> xi_window{0.0, 2.0};
    double intersection_tol = 1e-8;
};

struct ExperimentConfig {
    int schema_version = 1;
    Dimension dim{3};
    GridSpec grid;
    InitialData initial;
    SolverConfig solver;  // grid pointer filled in by parse_config
    std::vector<double> profile_m{0.5, 1.0, 2.0, 3.0};
    double profile_s_max = 10.0;
    double profile_tol = 1e-10;
    AnalysisSettings analysis;
    std::string output_dir;
    std::uint64_t seed = 0;
    Json raw;
};

struct SchemaViolation {
    std::string pointer;  // JSON pointer of the offending value
    std::string message;
};

const Json& experiment_schema();

// Interprets the keywords used by the published schema: type, const, enum,
// properties, required, additionalProperties, items, minItems, maxItems,
// minLength, minimum, maximum, exclusiveMinimum, exclusiveMaximum.
std::vector<SchemaViolation> validate_schema(const Json& instance, const Json& schema);

// Errors: schema violations or semantic problems -> Schema.
ExperimentConfig parse_config(const Json& j);

// Errors: missing file -> Io; malformed JSON or schema violations -> Schema,
// with messages of the form "<file>:<line>: <pointer>: <problem>".
ExperimentConfig load_config(const std::filesystem::path& path);

// Best-effort line number of a JSON pointer inside the original text (1-based, 0 if unknown).
std::size_t locate_pointer(const std::string& text, const std::string& pointer);

}  // namespace kslab
