#include "kslab/config.hpp"

#include <cmath>
#include <cctype>
#include <optional>
#include <fstream>
#include <sstream>

#include "kslab/error.hpp"

namespace kslab {

namespace detail {
extern const std::string_view experiment_schema_text;
}

namespace {

std::string type_name(const Json& v) {
    if (v.is_null()) return "null";
    if (v.is_boolean()) return "boolean";
    if (v.is_number_integer() || v.is_number_unsigned()) return "integer";
    if (v.is_number()) return "number";
    if (v.is_string()) return "string";
    if (v.is_array()) return "array";
    return "object";
}

bool has_type(const Json& v, const std::string& t) {
    if (t == "number") return v.is_number();
    if (t == "integer") {
        if (v.is_number_integer() || v.is_number_unsigned()) return true;
        return v.is_number_float() && std::isfinite(v.get<double>()) && std::floor(v.get<double>()) == v.get<double>();
    }
    return type_name(v) == t;
}

std::string escape_token(const std::string& key) {
    std::string out;
    for (char c : key) {
        if (c == '~') out += "~0";
        else if (c == '/') out += "~1";
        else out += c;
    }
    return out;
}

void check(const Json& v, const Json& s, const std::string& where, std::vector<SchemaViolation>& out) {
    auto fail = [&](std::string msg) { out.push_back({where.empty() ? "/" : where, std::move(msg)}); };
    if (s.contains("const") && v != s["const"]) {
        fail("must equal " + s["const"].dump());
        return;
    }
    if (s.contains("enum")) {
        bool found = false;
        for (const Json& e : s["enum"]) found = found || e == v;
        if (!found) {
            fail("must be one of " + s["enum"].dump());
            return;
        }
    }
    if (s.contains("type")) {
        const std::string t = s["type"].get<std::string>();
        if (!has_type(v, t)) {
            fail("expected " + t + ", got " + type_name(v));
            return;
        }
    }
    if (v.is_number()) {
        const double x = v.get<double>();
        if (s.contains("minimum") && x < s["minimum"].get<double>()) fail("must be >= " + s["minimum"].dump());
        if (s.contains("maximum") && x > s["maximum"].get<double>()) fail("must be <= " + s["maximum"].dump());
        if (s.contains("exclusiveMinimum") && !(x > s["exclusiveMinimum"].get<double>()))
            fail("must be > " + s["exclusiveMinimum"].dump());
        if (s.contains("exclusiveMaximum") && !(x < s["exclusiveMaximum"].get<double>()))
            fail("must be < " + s["exclusiveMaximum"].dump());
    }
    if (v.is_string() && s.contains("minLength") && v.get<std::string>().size() < s["minLength"].get<std::size_t>())
        fail("string too short");
    if (v.is_array()) {
        if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>())
            fail("needs at least " + s["minItems"].dump() + " items");
        if (s.contains("maxItems") && v.size() > s["maxItems"].get<std::size_t>())
            fail("allows at most " + s["maxItems"].dump() + " items");
        if (s.contains("items"))
            for (std::size_t i = 0; i < v.size(); ++i) check(v[i], s["items"], where + "/" + std::to_string(i), out);
    }
    if (v.is_object()) {
        if (s.contains("required"))
            for (const Json& key : s["required"])
                if (!v.contains(key.get<std::string>())) fail("missing required property \"" + key.get<std::string>() + "\"");
        const bool closed = s.contains("additionalProperties") && s["additionalProperties"] == false;
        for (auto it = v.begin(); it != v.end(); ++it) {
            const std::string child = where + "/" + escape_token(it.key());
            if (s.contains("properties") && s["properties"].contains(it.key()))
                check(it.value(), s["properties"][it.key()], child, out);
            else if (closed)
                out.push_back({child, "unknown property \"" + it.key() + "\""});
        }
    }
}

std::size_t line_of(const std::string& text, std::size_t offset) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

std::pair<double, double> pair_of(const Json& a) { return {a.at(0).get<double>(), a.at(1).get<double>()}; }

[[noreturn]] void semantic(const std::string& pointer, const std::string& msg) {
    throw Error(ErrorCode::Schema, pointer + ": " + msg);
}

}  // namespace

RadialGrid GridSpec::build() const {
    if (type == "uniform") return RadialGrid::uniform(r_max, intervals);
    if (type == "log") return RadialGrid::log_graded(r_max, intervals, h_min_fraction);
    if (type == "annulus") return RadialGrid::annulus(r_min, r_max, intervals);
    throw Error(ErrorCode::Schema, "unknown grid type " + type);
}

const Json& experiment_schema() {
    static const Json schema = Json::parse(detail::experiment_schema_text);
    return schema;
}

std::vector<SchemaViolation> validate_schema(const Json& instance, const Json& schema) {
    std::vector<SchemaViolation> out;
    check(instance, schema, "", out);
    return out;
}

ExperimentConfig parse_config(const Json& j) {
    const auto violations = validate_schema(j, experiment_schema());
    if (!violations.empty()) semantic(violations.front().pointer, violations.front().message);

    ExperimentConfig c;
    c.raw = j;
    c.schema_version = j.at("schema_version").get<int>();
    c.dim = Dimension(j.at("dim").get<int>());
    c.output_dir = j.at("output_dir").get<std::string>();
    c.seed = j.value("seed", std::uint64_t{0});

    const Json& g = j.at("grid");
    c.grid.type = g.at("type").get<std::string>();
    c.grid.r_max = g.at("r_max").get<double>();
    c.grid.intervals = g.at("intervals").get<std::size_t>();
    c.grid.h_min_fraction = g.value("h_min_fraction", c.grid.h_min_fraction);
    if (c.grid.type == "annulus") {
        if (!g.contains("r_min")) semantic("/grid", "annulus grids need r_min");
        c.grid.r_min = g.at("r_min").get<double>();
        if (!(c.grid.r_min < c.grid.r_max)) semantic("/grid/r_min", "must be below r_max");
    } else if (g.contains("r_min")) {
        semantic("/grid/r_min", "only allowed for annulus grids");
    }

    const Json& ini = j.at("initial");
    const std::string family = ini.at("family").get<std::string>();
    c.initial.require_nonincreasing = ini.value("require_nonincreasing", false);
    auto only = [&](std::initializer_list<const char*> allowed) {
        for (auto it = ini.begin(); it != ini.end(); ++it) {
            if (it.key() == "family" || it.key() == "require_nonincreasing") continue;
            bool ok = false;
            for (const char* a : allowed) ok = ok || it.key() == a;
            if (!ok) semantic("/initial/" + it.key(), "not a parameter of the " + family + " family");
        }
    };
    if (family == "gaussian") {
        only({"amplitude", "sigma"});
        Gaussian f;
        f.amplitude = ini.value("amplitude", f.amplitude);
        f.sigma = ini.value("sigma", f.sigma);
        c.initial.family = f;
    } else if (family == "plateau") {
        only({"amplitude", "radius", "edge_width"});
        Plateau f;
        f.amplitude = ini.value("amplitude", f.amplitude);
        f.radius = ini.value("radius", f.radius);
        f.edge_width = ini.value("edge_width", f.edge_width);
        c.initial.family = f;
    } else if (family == "bridged") {
        only({"k", "tail_decay", "tail_amplitude"});
        Bridged f;
        f.k = ini.value("k", f.k);
        f.tail_decay = ini.value("tail_decay", f.tail_decay);
        f.tail_amplitude = ini.value("tail_amplitude", f.tail_amplitude);
        c.initial.family = f;
    } else {
        only({"value"});
        c.initial.family = Constant{ini.value("value", 0.0)};
    }

    SolverConfig& s = c.solver;
    s.dim = c.dim;
    const Json sv = j.value("solver", Json::object());
    s.dt_safety = sv.value("dt_safety", s.dt_safety);
    s.dt_max = sv.value("dt_max", s.dt_max);
    s.blowup_threshold = sv.value("blowup_threshold", s.blowup_threshold);
    s.time_cap = sv.value("time_cap", s.time_cap);
    s.steady_tol = sv.value("steady_tol", s.steady_tol);
    s.schedule.growth_factor = sv.value("snapshot_growth", s.schedule.growth_factor);
    s.schedule.times = sv.value("snapshot_times", std::vector<double>{});
    s.snapshot_radii = sv.value("snapshot_radii", std::vector<double>{});
    s.upwind = sv.value("upwind", s.upwind);
    const std::string outer = sv.value("outer_boundary", std::string("zero_density"));
    s.outer = outer == "neumann" ? OuterBoundary::Neumann
              : outer == "dirichlet" ? OuterBoundary::Dirichlet
                                     : OuterBoundary::ZeroDensity;
    if (s.outer == OuterBoundary::Dirichlet && !sv.contains("outer_value"))
        semantic("/solver", "dirichlet outer boundary needs outer_value");
    s.outer_value = sv.value("outer_value", 0.0);
    if (c.grid.type == "annulus") {
        if (!sv.contains("inner_value")) semantic("/solver", "annulus grids need inner_value (inner Dirichlet data)");
        s.inner = InnerBoundary::Dirichlet;
        s.inner_value = sv.at("inner_value").get<double>();
    } else if (sv.contains("inner_value")) {
        semantic("/solver/inner_value", "only allowed on annulus grids");
    }
    if (family == "constant" && s.outer == OuterBoundary::ZeroDensity)
        semantic("/solver/outer_boundary", "constant data needs a neumann or dirichlet outer boundary");
    for (std::size_t i = 0; i < s.snapshot_radii.size(); ++i)
        if (s.snapshot_radii[i] > c.grid.r_max) semantic("/solver/snapshot_radii/" + std::to_string(i), "beyond r_max");
    if (sv.contains("regrid_intervals")) {
        GridSpec fine = c.grid;
        fine.intervals = sv.at("regrid_intervals").get<std::size_t>();
        fine.h_min_fraction = sv.value("regrid_h_min_fraction", fine.h_min_fraction);
        s.regrid = fine.build();
    }
    s.regrid_growth = sv.value("regrid_growth", s.regrid_growth);

    const Json pv = j.value("profiles", Json::object());
    c.profile_m = pv.value("m", c.profile_m);
    c.profile_s_max = pv.value("s_max", c.profile_s_max);
    c.profile_tol = pv.value("tol", c.profile_tol);

    const Json av = j.value("analysis", Json::object());
    AnalysisSettings& a = c.analysis;
    if (av.contains("window")) {
        a.window = pair_of(av["window"]);
        if (!(a.window->second >= 4.0 * a.window->first)) semantic("/analysis/window", "needs r_hi >= 4 r_lo");
    }
    a.radii_lo = av.value("radii_lo", a.radii_lo);
    a.radii_hi = av.value("radii_hi", a.radii_hi);
    if (a.radii_lo > 0.0 && a.radii_hi > 0.0 && !(a.radii_hi > a.radii_lo))
        semantic("/analysis/radii_hi", "must exceed radii_lo");
    a.radii_count = av.value("radii_count", a.radii_count);
    a.snapshots = av.value("snapshots", a.snapshots);
    if (av.contains("xi_window")) {
        a.xi_window = pair_of(av["xi_window"]);
        if (!(a.xi_window.second > a.xi_window.first)) semantic("/analysis/xi_window", "needs a < b");
    }
    a.intersection_tol = av.value("intersection_tol", a.intersection_tol);

    try {
        s.grid = make_grid(c.grid.build());
        validate(s);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::Schema) throw;
        semantic("/grid", e.what());
    }
    return c;
}

namespace {

// Walks well-formed JSON text and records where the value at `target` starts
// (the key position for object members).
class PointerScanner {
public:
    PointerScanner(const std::string& text, std::vector<std::string> target) : t_(text), target_(std::move(target)) {}

    std::optional<std::size_t> find() {
        ws();
        value(0, true, i_);
        return hit_;
    }

private:
    void ws() {
        while (i_ < t_.size() && std::isspace(static_cast<unsigned char>(t_[i_]))) ++i_;
    }
    bool at(char c) const { return i_ < t_.size() && t_[i_] == c; }

    std::string string() {
        std::string out;
        ++i_;
        while (i_ < t_.size() && t_[i_] != '"') {
            if (t_[i_] == '\\' && i_ + 1 < t_.size()) ++i_;
            out += t_[i_++];
        }
        ++i_;
        return out;
    }

    void value(std::size_t depth, bool matched, std::size_t anchor) {
        if (hit_ || i_ >= t_.size()) return;
        if (matched && depth == target_.size()) hit_ = anchor;
        if (at('{')) {
            ++i_;
            for (ws(); !hit_ && i_ < t_.size() && !at('}');) {
                if (!at('"')) return;
                const std::size_t key_at = i_;
                const std::string key = string();
                ws();
                if (!at(':')) return;
                ++i_;
                ws();
                value(depth + 1, matched && depth < target_.size() && key == target_[depth], key_at);
                ws();
                if (at(',')) ++i_, ws();
            }
            ++i_;
        } else if (at('[')) {
            ++i_;
            std::size_t index = 0;
            for (ws(); !hit_ && i_ < t_.size() && !at(']'); ++index) {
                const bool m = matched && depth < target_.size() && target_[depth] == std::to_string(index);
                const std::size_t before = i_;
                value(depth + 1, m, i_);
                ws();
                if (at(',')) ++i_, ws();
                else if (i_ == before) return;
            }
            ++i_;
        } else if (at('"')) {
            string();
        } else {
            while (i_ < t_.size() && !std::isspace(static_cast<unsigned char>(t_[i_])) && !at(',') && !at('}') &&
                   !at(']'))
                ++i_;
        }
    }

    const std::string& t_;
    std::vector<std::string> target_;
    std::size_t i_ = 0;
    std::optional<std::size_t> hit_;
};

}  // namespace

std::size_t locate_pointer(const std::string& text, const std::string& pointer) {
    std::vector<std::string> tokens;
    if (!pointer.empty()) {
        if (pointer.front() != '/') return 0;
        std::size_t start = 1;
        while (true) {
            const std::size_t end = pointer.find('/', start);
            const std::string raw = pointer.substr(start, end == std::string::npos ? end : end - start);
            std::string key;
            for (std::size_t i = 0; i < raw.size(); ++i) {
                if (raw[i] == '~' && i + 1 < raw.size()) {
                    key += raw[i + 1] == '1' ? '/' : '~';
                    ++i;
                } else {
                    key += raw[i];
                }
            }
            tokens.push_back(std::move(key));
            if (end == std::string::npos) break;
            start = end + 1;
        }
    }
    const std::optional<std::size_t> pos = PointerScanner(text, std::move(tokens)).find();
    return pos ? line_of(text, *pos) : 0;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::Schema,
                    path.string() + ":" + std::to_string(line_of(text, e.byte)) + ": malformed JSON: " + e.what());
    }
    const auto violations = validate_schema(j, experiment_schema());
    if (!violations.empty()) {
        std::string msg;
        for (const SchemaViolation& v : violations) {
            if (!msg.empty()) msg += "\n";
            const std::size_t line = locate_pointer(text, v.pointer);
            msg += path.string() + ":" + (line ? std::to_string(line) : std::string("?")) + ": " + v.pointer + ": " +
                   v.message;
        }
        throw Error(ErrorCode::Schema, msg);
    }
    try {
        return parse_config(j);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::Schema) throw;
        const std::string what = e.what();
        const std::string pointer = what.substr(0, what.find(':'));
        const std::size_t line = locate_pointer(text, pointer);
        throw Error(ErrorCode::Schema,
                    path.string() + ":" + (line ? std::to_string(line) : std::string("?")) + ": " + what);
    }
}

}  // namespace kslab
