#include "kslab/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

#include "kslab/analysis.hpp"
#include "kslab/batch.hpp"
#include "kslab/config.hpp"
#include "kslab/io.hpp"
#include "kslab/profile.hpp"
#include "kslab/zeronum.hpp"

namespace kslab::cli {

namespace {

namespace fs = std::filesystem;

int exit_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::Io: return MissingInput;
    case ErrorCode::Schema:
    case ErrorCode::InvalidInitialData: return SchemaError;
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidWindow: return Usage;
    case ErrorCode::NotEnoughData:
    case ErrorCode::EstimateUnreliable:
    case ErrorCode::IncompatibleRuns:
    case ErrorCode::NotConverged: return Inconclusive;
    default: return Internal;
    }
}

std::string m_label(double m) {
    std::ostringstream s;
    s << m;
    return s.str();
}

ProfileOptions profile_options(double s_max, double tol) {
    ProfileOptions opt;
    opt.s_max = s_max;
    opt.tol = tol;
    return opt;
}

// Settings recovered from the config stored in run.json, or defaults.
ExperimentConfig stored_config(const io::LoadedRun& loaded) {
    if (loaded.meta.contains("config")) {
        try {
            return parse_config(loaded.meta["config"]);
        } catch (const Error&) {
        }
    }
    ExperimentConfig c;
    c.dim = loaded.run.config.dim;
    return c;
}

struct ProfileArgs {
    std::vector<double> m;
    int dim = 3;
    double s_max = 10.0;
    double tol = 1e-10;
    std::string out = ".";
    int threads = 0;
};

int cmd_profile(const ProfileArgs& a, std::ostream& out, std::ostream& err) {
    for (double m : a.m)
        if (!(m > 0.0) || !std::isfinite(m)) {
            err << "kslab profile: m must be a positive real, got " << m << "\n";
            return Usage;
        }
    const Dimension dim(a.dim);
    const int threads = resolve_threads(a.threads);
    const auto results = profile_batch(a.m, dim, profile_options(a.s_max, a.tol), threads);
    int code = Ok;
    for (std::size_t k = 0; k < results.size(); ++k) {
        const ProfileOutcome& r = results[k];
        if (!r.profile) {
            err << "kslab profile: m=" << a.m[k] << ": " << r.message << "\n";
            code = std::max(code, exit_for(*r.error));
            continue;
        }
        const SelfSimilarProfile& p = *r.profile;
        const fs::path stem = fs::path(a.out) / ("profile_m" + m_label(p.m) + "_N" + std::to_string(p.dim));
        io::write_profile(stem, p);
        out << "m=" << p.m << " N=" << p.dim << " classification=" << to_string(p.classification)
            << " ell=" << io::format_double(p.ell) << " tail_error=" << io::format_double(p.tail_error()) << " -> "
            << stem.string() << ".csv\n";
        if (p.classification == Classification::Indeterminate) code = std::max(code, int(Inconclusive));
    }
    return code;
}

int cmd_simulate(const std::string& path, const std::string& out_override, std::ostream& out, std::ostream& err) {
    const ExperimentConfig c = load_config(path);
    const fs::path dir = out_override.empty() ? fs::path(c.output_dir) : fs::path(out_override);
    const RunOutcome r = run_job({c.solver, c.initial});
    if (!r.run) {
        err << "kslab simulate: " << r.message << "\n";
        return exit_for(*r.error);
    }
    io::RunSummary summary{r.estimate, r.estimate ? std::string() : r.message};
    if (!r.estimate && summary.estimate_error.empty()) summary.estimate_error = "no blow-up detected";
    io::write_run(dir, *r.run, summary, c.raw);
    out << "termination=" << to_string(r.run->termination) << " steps=" << r.run->steps
        << " final_time=" << io::format_double(r.run->final_time())
        << " snapshots=" << r.run->snapshots.size() << " mass_drift=" << io::format_double(r.run->mass_drift);
    if (r.estimate) out << " T_est=" << io::format_double(r.estimate->T_est);
    out << " -> " << dir.string() << "\n";
    if (r.run->termination == Termination::StepFailed) {
        err << "kslab simulate: " << r.run->message << "\n";
        return Inconclusive;
    }
    return Ok;
}

struct IntersectArgs {
    std::string run_dir;
    std::vector<double> m;
    double T = 0.0;
    double tol = -1.0;
    std::string against;
};

int cmd_intersect(const IntersectArgs& a, std::ostream& out, std::ostream& err) {
    const io::LoadedRun loaded = io::read_run(a.run_dir);
    const ExperimentConfig c = stored_config(loaded);
    const double tol = a.tol >= 0.0 ? a.tol : c.analysis.intersection_tol;
    io::Json verdicts = io::Json::object();
    bool all_pass = true;

    if (!a.against.empty()) {
        const io::LoadedRun other = io::read_run(a.against);
        const ZeroCountSeries s = monotonicity_report(loaded.run, other.run, tol);
        io::write_series(fs::path(a.run_dir) / "intersections_against.csv", s);
        verdicts["against"] = io::series_verdict(s);
        verdicts["against"]["other"] = a.against;
        all_pass = s.pass;
        out << "against " << a.against << ": " << (s.pass ? "PASS" : "FAIL") << " increases=" << s.increases << "\n";
    } else {
        double T = a.T;
        if (!(T > 0.0)) {
            if (!loaded.T_est) {
                err << "kslab intersect: the run has no blow-up time estimate; pass --T\n";
                return Inconclusive;
            }
            T = *loaded.T_est;
        }
        const std::vector<double> ms = a.m.empty() ? c.profile_m : a.m;
        const auto profiles = profile_batch(ms, loaded.run.config.dim, profile_options(c.profile_s_max, c.profile_tol),
                                            resolve_threads());
        for (std::size_t k = 0; k < ms.size(); ++k) {
            if (!profiles[k].profile) {
                err << "kslab intersect: m=" << ms[k] << ": " << profiles[k].message << "\n";
                return exit_for(*profiles[k].error);
            }
            const ZeroCountSeries s = monotonicity_report(loaded.run, *profiles[k].profile, T, tol);
            const std::string label = m_label(ms[k]);
            io::write_series(fs::path(a.run_dir) / ("intersections_m" + label + ".csv"), s);
            verdicts["m" + label] = io::series_verdict(s);
            verdicts["m" + label]["T"] = T;
            all_pass = all_pass && s.pass;
            out << "m=" << label << ": " << (s.pass ? "PASS" : "FAIL") << " increases=" << s.increases
                << " ambiguous=" << s.ambiguous_total << "\n";
        }
    }
    io::write_json(fs::path(a.run_dir) / "intersections.json", verdicts);
    return all_pass ? Ok : Inconclusive;
}

struct ReportArgs {
    std::string run_dir;
    std::vector<double> window;
    std::vector<double> xi_window;
    std::size_t radii_count = 0;
    std::size_t snapshots = 0;
    std::string out;
};

int cmd_report(const ReportArgs& a, std::ostream& out, std::ostream& err) {
    const io::LoadedRun loaded = io::read_run(a.run_dir);
    const ExperimentConfig c = stored_config(loaded);
    const BlowupRun& run = loaded.run;
    if (run.termination != Termination::BlowupDetected || !loaded.T_est) {
        err << "kslab report: the run did not blow up or has no T estimate (termination="
            << to_string(run.termination) << ")\n";
        return Inconclusive;
    }
    const double T = *loaded.T_est;
    const std::size_t count = a.snapshots ? a.snapshots : c.analysis.snapshots;
    const std::pair<double, double> window =
        a.window.size() == 2 ? std::pair{a.window[0], a.window[1]}
                             : c.analysis.window.value_or(default_window(run, T, count));
    const std::pair<double, double> xi_window =
        a.xi_window.size() == 2 ? std::pair{a.xi_window[0], a.xi_window[1]} : c.analysis.xi_window;
    const RadialGrid& g = run.snapshots.back().w.grid();
    const double first = g.starts_at_origin() ? g[1] : g.r_min();
    double lo = c.analysis.radii_lo > 0.0 ? c.analysis.radii_lo : 2.0 * first;
    double hi = c.analysis.radii_hi > 0.0 ? c.analysis.radii_hi : 0.5 * g.r_max();
    lo = std::min(lo, window.first);
    hi = std::max(hi, window.second);
    const std::vector<double> radii = log_radii(lo, hi, a.radii_count ? a.radii_count : c.analysis.radii_count);

    const WExtraction wx = extract_W(run, T, radii, count);
    const RadialField U = extract_U(wx.W, run.config.dim);
    ProfileReport rep = alpha_estimates(wx.W, U, run.config.dim, window);
    rep.T = T;
    rep.W_residual = wx.relative_residual;
    rep.regularity = regularity_diagnostics(run, run.config.dim);
    try {
        rep.typeB_cauchy = typeB_diagnostic(run, T, xi_window);
    } catch (const Error& e) {
        err << "kslab report: type-B diagnostic skipped: " << e.what() << "\n";
    }
    const fs::path dir = a.out.empty() ? fs::path(a.run_dir) : fs::path(a.out);
    io::write_report(dir, rep);
    out << "T=" << io::format_double(T) << " window=[" << window.first << ", " << window.second << "]"
        << " alpha_U=" << rep.alpha_from_U << " alpha_W=" << rep.alpha_from_W << " plateau=" << rep.plateau_ratio
        << " mismatch=" << rep.mismatch << " c4=" << rep.regularity.c4 << " c3=" << rep.regularity.c3 << "\n";
    if (!rep.converged) {
        err << "kslab report: the two alpha estimates differ by more than 15%\n";
        return Inconclusive;
    }
    return Ok;
}

struct SweepSpec {
    io::Json base;
    std::string parameter;
    std::vector<double> values;
    std::string output_dir;
};

SweepSpec load_sweep(const fs::path& path) {
    const io::Json j = io::read_json(path);
    auto bad = [&](const std::string& msg) { throw Error(ErrorCode::Schema, path.string() + ": " + msg); };
    if (!j.is_object()) bad("expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (it.key() != "base" && it.key() != "parameter" && it.key() != "values" && it.key() != "random" &&
            it.key() != "output_dir")
            bad("unknown property \"" + it.key() + "\"");
    SweepSpec s;
    if (!j.contains("base")) bad("missing \"base\"");
    if (j["base"].is_string()) {
        fs::path base = j["base"].get<std::string>();
        if (base.is_relative()) base = path.parent_path() / base;
        s.base = io::read_json(base);
    } else if (j["base"].is_object()) {
        s.base = j["base"];
    } else {
        bad("\"base\" must be a config object or a path");
    }
    if (!j.contains("parameter") || !j["parameter"].is_string()) bad("\"parameter\" must be a JSON pointer string");
    s.parameter = j["parameter"].get<std::string>();
    if (s.parameter.empty() || s.parameter[0] != '/') bad("\"parameter\" must start with '/'");
    if (j.contains("values") == j.contains("random")) bad("give exactly one of \"values\" and \"random\"");
    if (j.contains("values")) {
        if (!j["values"].is_array() || j["values"].empty()) bad("\"values\" must be a nonempty array");
        for (const auto& v : j["values"]) {
            if (!v.is_number()) bad("\"values\" must hold numbers");
            s.values.push_back(v.get<double>());
        }
    } else {
        const io::Json& r = j["random"];
        if (!r.is_object() || !r.contains("lo") || !r.contains("hi") || !r.contains("count") ||
            !r["lo"].is_number() || !r["hi"].is_number() || !r["count"].is_number_unsigned())
            bad("\"random\" needs numeric lo, hi and a positive integer count");
        const double lo = r["lo"].get<double>(), hi = r["hi"].get<double>();
        if (!(hi > lo)) bad("\"random\" needs lo < hi");
        std::mt19937_64 gen(s.base.value("seed", std::uint64_t{0}));
        std::uniform_real_distribution<double> dist(lo, hi);
        for (std::size_t k = 0; k < r["count"].get<std::size_t>(); ++k) s.values.push_back(dist(gen));
    }
    s.output_dir = j.value("output_dir", s.base.value("output_dir", std::string("sweep")));
    return s;
}

int cmd_sweep(const std::string& path, int threads_requested, std::ostream& out, std::ostream& err) {
    if (!fs::exists(path)) throw Error(ErrorCode::Io, "cannot open sweep file " + path);
    const SweepSpec spec = load_sweep(path);
    const fs::path root = spec.output_dir;
    std::vector<ExperimentConfig> configs;
    std::vector<RunJob> jobs;
    for (std::size_t k = 0; k < spec.values.size(); ++k) {
        io::Json cfg = spec.base;
        const io::Json::json_pointer ptr(spec.parameter);
        if (!cfg.contains(ptr.parent_pointer()))
            throw Error(ErrorCode::Schema, path + ": parameter " + spec.parameter + " has no parent in the base config");
        cfg[ptr] = spec.values[k];
        cfg["output_dir"] = (root / ("point_" + std::to_string(k))).string();
        try {
            configs.push_back(parse_config(cfg));
        } catch (const Error& e) {
            throw Error(ErrorCode::Schema, path + ": point " + std::to_string(k) + ": " + e.what());
        }
        jobs.push_back({configs.back().solver, configs.back().initial});
    }
    const auto results = run_batch(jobs, resolve_threads(threads_requested));
    fs::create_directories(root);
    std::ofstream csv(root / "sweep.csv", std::ios::binary);
    if (!csv) throw Error(ErrorCode::Io, "cannot write " + (root / "sweep.csv").string());
    csv << "# kslab " << io::version() << "\n";
    csv << "index,value,termination,T_est,final_time,steps,mass_drift\n";
    int code = Ok;
    for (std::size_t k = 0; k < results.size(); ++k) {
        const RunOutcome& r = results[k];
        csv << k << "," << io::format_double(spec.values[k]) << ",";
        if (!r.run) {
            csv << "error,nan,nan,0,nan\n";
            err << "kslab sweep: point " << k << ": " << r.message << "\n";
            code = std::max(code, int(Inconclusive));
            continue;
        }
        io::RunSummary summary{r.estimate, r.estimate ? std::string() : r.message};
        io::write_run(configs[k].output_dir, *r.run, summary, configs[k].raw);
        csv << to_string(r.run->termination) << ","
            << (r.estimate ? io::format_double(r.estimate->T_est) : std::string("nan")) << ","
            << io::format_double(r.run->final_time()) << "," << r.run->steps << ","
            << io::format_double(r.run->mass_drift) << "\n";
    }
    out << "sweep: " << results.size() << " points -> " << (root / "sweep.csv").string() << "\n";
    return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Numerical lab for radial blow-up in the Keller-Segel mass-function equation", "kslab"};
    app.set_version_flag("--version", std::string(io::version()));
    app.require_subcommand(1);

    ProfileArgs pa;
    CLI::App* profile = app.add_subcommand("profile", "Compute backward self-similar profiles");
    profile->add_option("--m", pa.m, "Tail coefficient(s) m > 0")->required()->expected(1, -1);
    profile->add_option("--dim", pa.dim, "Space dimension N >= 3")->check(CLI::Range(3, 1000));
    profile->add_option("--s-max", pa.s_max, "Upper end of the V integration")->check(CLI::PositiveNumber);
    profile->add_option("--tol", pa.tol, "Integration tolerance")->check(CLI::PositiveNumber);
    profile->add_option("--out", pa.out, "Output directory");
    profile->add_option("--threads", pa.threads, "Thread count (capped by KSLAB_THREADS)");

    std::string sim_config, sim_out;
    CLI::App* simulate = app.add_subcommand("simulate", "Run the PDE solver from a JSON config");
    simulate->add_option("config", sim_config, "Experiment config")->required();
    simulate->add_option("--out", sim_out, "Override output_dir");

    IntersectArgs ia;
    CLI::App* intersect = app.add_subcommand("intersect", "Zero-number series of a run against profiles or a run");
    intersect->add_option("run_dir", ia.run_dir, "Run directory")->required();
    intersect->add_option("--m", ia.m, "Profile tail coefficients (default: from the run config)")->expected(1, -1);
    intersect->add_option("--T", ia.T, "Blow-up time (default: the run's estimate)")->check(CLI::PositiveNumber);
    intersect->add_option("--tol", ia.tol, "Relative sign tolerance")->check(CLI::NonNegativeNumber);
    intersect->add_option("--against", ia.against, "Second run directory for solution/solution counts");

    ReportArgs ra;
    CLI::App* report = app.add_subcommand("report", "Final-time profile and alpha estimates");
    report->add_option("run_dir", ra.run_dir, "Run directory")->required();
    report->add_option("--window", ra.window, "Analysis window r_lo r_hi")->expected(2);
    report->add_option("--xi-window", ra.xi_window, "Self-similar window a b")->expected(2);
    report->add_option("--radii", ra.radii_count, "Number of extraction radii")->check(CLI::Range(3, 1000000));
    report->add_option("--snapshots", ra.snapshots, "Snapshots in the W fit")->check(CLI::Range(3, 1000));
    report->add_option("--out", ra.out, "Output directory (default: the run directory)");

    std::string sweep_file;
    int sweep_threads = 0;
    CLI::App* sweep = app.add_subcommand("sweep", "Run a one-parameter family of experiments");
    sweep->add_option("sweep", sweep_file, "Sweep description")->required();
    sweep->add_option("--threads", sweep_threads, "Thread count (capped by KSLAB_THREADS)");

    std::vector<const char*> argv{"kslab"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? Ok : Usage;
    }

    try {
        if (*profile) return cmd_profile(pa, out, err);
        if (*simulate) return cmd_simulate(sim_config, sim_out, out, err);
        if (*intersect) return cmd_intersect(ia, out, err);
        if (*report) return cmd_report(ra, out, err);
        if (*sweep) return cmd_sweep(sweep_file, sweep_threads, out, err);
    } catch (const Error& e) {
        err << "kslab: " << e.what() << "\n";
        return exit_for(e.code());
    } catch (const std::exception& e) {
        err << "kslab: internal error: " << e.what() << "\n";
        return Internal;
    }
    return Internal;
}

}  // namespace kslab::cli
