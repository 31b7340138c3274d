#include "kslab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kslab/numerics.hpp"

namespace kslab {

std::string to_string(OuterBoundary b) {
    switch (b) {
    case OuterBoundary::ZeroDensity: return "zero_density";
    case OuterBoundary::Neumann: return "neumann";
    case OuterBoundary::Dirichlet: return "dirichlet";
    }
    return "unknown";
}

std::string to_string(Termination t) {
    switch (t) {
    case Termination::BlowupDetected: return "BlowupDetected";
    case Termination::TimeCap: return "TimeCap";
    case Termination::SteadyState: return "SteadyState";
    case Termination::StepFailed: return "StepFailed";
    }
    return "Unknown";
}

void validate(const SolverConfig& cfg) {
    if (!cfg.grid) throw Error(ErrorCode::InvalidArgument, "solver config without grid");
    if (!(cfg.dt_safety > 0.0 && cfg.dt_safety <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "dt_safety must lie in (0, 1]");
    if (!(cfg.dt_max > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt_max must be positive");
    if (!(cfg.time_cap > 0.0)) throw Error(ErrorCode::InvalidArgument, "time_cap must be positive");
    if (!(cfg.blowup_threshold > 0.0)) throw Error(ErrorCode::InvalidArgument, "blowup_threshold must be positive");
    if (!cfg.grid->starts_at_origin() && cfg.inner != InnerBoundary::Dirichlet)
        throw Error(ErrorCode::InvalidArgument, "annulus grids need a Dirichlet inner boundary");
    if (cfg.grid->starts_at_origin() && cfg.inner != InnerBoundary::Symmetry)
        throw Error(ErrorCode::InvalidArgument, "grids through r = 0 use the symmetry condition");
}

namespace {

// Control-volume geometry of a grid for the operator r^{-(N+1)} (r^{N+1} w_r)_r.
struct Geometry {
    std::vector<double> face;    // r_{i+1/2}^{N+1} / (r_{i+1} - r_i)
    std::vector<double> volume;  // int over the control volume of r^{N+1} dr
    std::vector<double> hm, hp;  // left and right spacings
    double outer_face = 0.0;     // R^N for the u = 0 flux
    Geometry(const RadialGrid& g, Dimension dim) {
        const std::size_t n = g.size();
        const double np1 = dim.as_double() + 1.0;
        face.resize(n - 1);
        volume.assign(n, 0.0);
        hm.assign(n, 0.0);
        hp.assign(n, 0.0);
        std::vector<double> edges(n + 1);
        edges[0] = g[0];
        edges[n] = g[n - 1];
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double h = g[i + 1] - g[i];
            const double rf = 0.5 * (g[i] + g[i + 1]);
            face[i] = std::pow(rf, np1) / h;
            edges[i + 1] = rf;
            hp[i] = h;
            hm[i + 1] = h;
        }
        for (std::size_t i = 0; i < n; ++i)
            volume[i] = (std::pow(edges[i + 1], np1 + 1.0) - std::pow(edges[i], np1 + 1.0)) / (np1 + 1.0);
        outer_face = std::pow(g[n - 1], dim.as_double());
    }
};

struct Assembled {
    std::vector<double> lo, di, up, rhs;
};

bool centered_breaks_sign(const Geometry& geo, std::size_t i, double b) {
    const double diff_lo = geo.face[i - 1] / geo.volume[i];
    const double cm = -geo.hp[i] / (geo.hm[i] * (geo.hm[i] + geo.hp[i]));
    return diff_lo + b * cm < 0.0;
}

void mask_into(const Geometry& geo, const RadialGrid& g, std::span<const double> w, StencilMask& mask) {
    const std::size_t n = g.size();
    for (std::size_t i = 1; i + 1 < n; ++i)
        if (centered_breaks_sign(geo, i, g[i] * std::max(w[i], 0.0))) mask[i] = 1;
}

void assemble(const Geometry& geo, const RadialGrid& g, std::span<const double> w, double dt,
              const SolverConfig& cfg, const StencilMask* mask, Assembled& a) {
    const std::size_t n = g.size();
    const double nn = cfg.dim.as_double();
    a.lo.assign(n, 0.0);
    a.di.assign(n, 0.0);
    a.up.assign(n, 0.0);
    a.rhs.assign(w.begin(), w.end());
    // rows of A, turned into I - dt A at the end
    for (std::size_t i = 0; i < n; ++i) {
        double lo = 0.0, di = 0.0, up = 0.0;
        const double wi = std::max(w[i], 0.0);
        if (i + 1 < n) {
            up += geo.face[i] / geo.volume[i];
            di -= geo.face[i] / geo.volume[i];
        }
        if (i > 0) {
            lo += geo.face[i - 1] / geo.volume[i];
            di -= geo.face[i - 1] / geo.volume[i];
        }
        if (i > 0 && i + 1 < n) {
            const double b = g[i] * wi;
            const bool upwind = mask ? (*mask)[i] != 0 : (cfg.upwind && centered_breaks_sign(geo, i, b));
            if (upwind) {
                up += b / geo.hp[i];
                di -= b / geo.hp[i];
            } else {
                const double hm = geo.hm[i], hp = geo.hp[i];
                lo += b * (-hp / (hm * (hm + hp)));
                di += b * ((hp - hm) / (hm * hp));
                up += b * (hm / (hp * (hm + hp)));
            }
            di += nn * wi;
        } else if (i == 0) {
            di += nn * wi;
        } else {
            switch (cfg.outer) {
            case OuterBoundary::ZeroDensity:
                // flux R^{N+1} w_r = -N R^N w at the outer face; u w vanishes there
                di -= nn * geo.outer_face / geo.volume[i];
                break;
            case OuterBoundary::Neumann: di += nn * wi; break;
            case OuterBoundary::Dirichlet: break;
            }
        }
        a.lo[i] = -dt * lo;
        a.di[i] = 1.0 - dt * di;
        a.up[i] = -dt * up;
    }
    if (cfg.inner == InnerBoundary::Dirichlet) {
        a.lo[0] = 0.0;
        a.di[0] = 1.0;
        a.up[0] = 0.0;
        a.rhs[0] = cfg.inner_value;
    }
    if (cfg.outer == OuterBoundary::Dirichlet) {
        a.lo[n - 1] = 0.0;
        a.di[n - 1] = 1.0;
        a.up[n - 1] = 0.0;
        a.rhs[n - 1] = cfg.outer_value;
    }
}

std::vector<double> advance(const Geometry& geo, const RadialGrid& g, std::span<const double> w, double dt,
                            const SolverConfig& cfg, const StencilMask* mask, StepStats& stats) {
    Assembled a;
    assemble(geo, g, w, dt, cfg, mask, a);
    std::vector<double> next(w.size());
    if (!num::solve_tridiagonal(a.lo, a.di, a.up, a.rhs, next))
        throw Error(ErrorCode::StepFailed, "tridiagonal solve failed");
    std::size_t clamped = 0;
    for (double& v : next) {
        if (v < 0.0) {
            v = 0.0;
            ++clamped;
        }
    }
    stats.clamped += clamped;
    if (static_cast<double>(clamped) > 1e-3 * static_cast<double>(next.size())) stats.positivity_warning = true;
    return next;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

std::vector<double> probe(const RadialField& w, Dimension dim, const std::vector<double>& radii) {
    std::vector<double> out;
    if (radii.empty()) return out;
    const RadialField u = u_from_w(w, dim);
    const auto nodes = w.grid().nodes();
    for (double r : radii) {
        const std::size_t i = num::bracket(nodes, r);
        const double t = std::clamp((r - nodes[i]) / (nodes[i + 1] - nodes[i]), 0.0, 1.0);
        out.push_back((1.0 - t) * u[i] + t * u[i + 1]);
    }
    return out;
}

// Bookkeeping shared by run and run_lockstep for one trajectory.
struct Track {
    BlowupRun run;
    std::vector<double> w;
    GridPtr grid;
    double S0 = 0.0, S = 0.0, last_recorded = 0.0, next_growth = 0.0;
    std::size_t since_record = 0;

    void snapshot(double t, Dimension dim) {
        if (!run.snapshots.empty() && run.snapshots.back().t == t) return;
        RadialField f(grid, w, t);
        run.probe_u.push_back(probe(f, dim, run.config.snapshot_radii));
        run.snapshots.push_back({t, std::move(f)});
    }
    void record(double t, bool force) {
        ++since_record;
        if (force || since_record >= run.config.history_stride || std::abs(S - last_recorded) > 1e-3 * last_recorded) {
            if (!run.supnorm_history.empty() && run.supnorm_history.back().t == t) return;
            run.supnorm_history.push_back({t, S});
            last_recorded = S;
            since_record = 0;
        }
    }
    bool growth_due() const { return run.config.schedule.growth_factor > 1.0 && S >= next_growth; }
    void bump_growth() {
        while (next_growth <= S) next_growth *= run.config.schedule.growth_factor;
    }
};

Track start_track(const SolverConfig& cfg, const RadialField& w0) {
    if (!(w0.grid() == *cfg.grid)) throw Error(ErrorCode::InvalidArgument, "initial field is not on the configured grid");
    Track tr;
    tr.run.config = cfg;
    tr.grid = cfg.grid;
    tr.w.assign(w0.values().begin(), w0.values().end());
    const RadialField f(tr.grid, tr.w, 0.0);
    tr.S0 = tr.S = u_supnorm(f, cfg.dim);
    if (!(cfg.blowup_threshold > tr.S0))
        throw Error(ErrorCode::InvalidArgument, "blowup_threshold must exceed the initial sup-norm");
    tr.last_recorded = tr.S;
    tr.next_growth = std::max(tr.S0, 1e-300) * cfg.schedule.growth_factor;
    tr.run.initial_mass = mass_from_w(f, cfg.dim);
    tr.snapshot(0.0, cfg.dim);
    tr.record(0.0, true);
    return tr;
}

void after_step(Track& tr, std::vector<double> next, double t, double dt, const StepStats& st,
                bool& scheduled, std::optional<Termination>& term) {
    const SolverConfig& cfg = tr.run.config;
    const double rate = max_abs_diff(next, tr.w) / dt;
    double wmax = 0.0;
    for (double v : next) wmax = std::max(wmax, std::abs(v));
    tr.w = std::move(next);
    ++tr.run.steps;
    tr.run.clamped_total += st.clamped;
    tr.run.positivity_warning = tr.run.positivity_warning || st.positivity_warning;
    const RadialField f(tr.grid, tr.w, t);
    tr.S = u_supnorm(f, cfg.dim);
    if (!std::isfinite(tr.S)) {
        term = Termination::StepFailed;
        tr.run.message = "non-finite sup-norm";
        return;
    }
    tr.record(t, false);
    if (cfg.outer == OuterBoundary::ZeroDensity && tr.S <= cfg.mass_window * tr.S0 && tr.run.initial_mass > 0.0) {
        const double drift = std::abs(mass_from_w(f, cfg.dim) - tr.run.initial_mass) / tr.run.initial_mass;
        tr.run.mass_drift = std::max(tr.run.mass_drift, drift);
    }
    if (tr.S > cfg.blowup_threshold)
        term = Termination::BlowupDetected;
    else if (t >= cfg.time_cap)
        term = Termination::TimeCap;
    else if (cfg.steady_tol > 0.0 && rate <= cfg.steady_tol * std::max(1.0, wmax))
        term = Termination::SteadyState;
    if (tr.growth_due()) {
        scheduled = true;
        tr.bump_growth();
    }
}

void regrid(Track& tr, Geometry& geo) {
    const SolverConfig& cfg = tr.run.config;
    GridPtr g = make_grid(*cfg.regrid);
    if (g->r_min() < tr.grid->r_min() || g->r_max() > tr.grid->r_max())
        throw Error(ErrorCode::InvalidArgument, "regrid target must lie inside the current grid");
    const auto nodes = tr.grid->nodes();
    num::Pchip interp(std::vector<double>(nodes.begin(), nodes.end()), tr.w);
    std::vector<double> w(g->size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::max(interp((*g)[i]), 0.0);
    tr.grid = g;
    tr.w = std::move(w);
    tr.run.config.grid = g;
    tr.run.regridded = true;
    geo = Geometry(*g, cfg.dim);
}

std::vector<double> schedule_times(const SolverConfig& cfg) {
    std::vector<double> times;
    for (double t : cfg.schedule.times)
        if (t > 0.0 && t < cfg.time_cap) times.push_back(t);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    return times;
}

}  // namespace

StencilMask advection_mask(const RadialField& w, double dt, const SolverConfig& cfg) {
    (void)dt;
    const Geometry geo(w.grid(), cfg.dim);
    StencilMask mask(w.size(), 0);
    if (cfg.upwind) mask_into(geo, w.grid(), w.values(), mask);
    return mask;
}

RadialField step(const RadialField& w, double dt, const SolverConfig& cfg, StepStats* stats, const StencilMask* mask) {
    if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
    const Geometry geo(w.grid(), cfg.dim);
    StepStats local;
    std::vector<double> next = advance(geo, w.grid(), w.values(), dt, cfg, mask, stats ? *stats : local);
    std::optional<double> t;
    if (w.time()) t = *w.time() + dt;
    return RadialField(w.grid_ptr(), std::move(next), t);
}

double u_supnorm(const RadialField& w, Dimension dim) {
    return u_from_w(w, dim).sup_norm();
}

double mass_from_w(const RadialField& w, Dimension dim) {
    const double r = w.grid().r_max();
    return unit_sphere_area(dim) * std::pow(r, dim.as_double()) * w[w.size() - 1];
}

BlowupRun run(const SolverConfig& cfg, const RadialField& w0) {
    validate(cfg);
    Track tr = start_track(cfg, w0);
    Geometry geo(*tr.grid, cfg.dim);
    const std::vector<double> sched = schedule_times(cfg);
    std::size_t next_sched = 0;
    double t = 0.0;
    std::optional<Termination> term;
    while (!term) {
        if (tr.run.steps >= cfg.max_steps) {
            term = Termination::TimeCap;
            tr.run.message = "step limit reached";
            break;
        }
        double dt = std::min(cfg.dt_max, cfg.dt_safety / std::max(tr.S, 1e-300));
        double t_next = t + dt;
        bool hit_sched = false;
        if (next_sched < sched.size() && t_next >= sched[next_sched]) {
            t_next = sched[next_sched];
            hit_sched = true;
        }
        if (t_next >= cfg.time_cap) t_next = cfg.time_cap;
        dt = t_next - t;
        StepStats st;
        std::vector<double> next;
        try {
            next = advance(geo, *tr.grid, tr.w, dt, cfg, nullptr, st);
        } catch (const Error& e) {
            term = Termination::StepFailed;
            tr.run.message = e.what();
            break;
        }
        t = t_next;
        bool snap = false;
        after_step(tr, std::move(next), t, dt, st, snap, term);
        if (hit_sched) {
            snap = true;
            ++next_sched;
        }
        if (snap) tr.snapshot(t, cfg.dim);
        if (!term && cfg.regrid && !tr.run.regridded && tr.S >= cfg.regrid_growth * tr.S0) {
            regrid(tr, geo);
            tr.snapshot(t, cfg.dim);
        }
    }
    tr.run.termination = *term;
    tr.record(t, true);
    tr.snapshot(t, cfg.dim);
    return std::move(tr.run);
}

std::pair<BlowupRun, BlowupRun> run_lockstep(const SolverConfig& cfg, const RadialField& w0a, const RadialField& w0b) {
    validate(cfg);
    if (cfg.regrid) throw Error(ErrorCode::InvalidArgument, "lockstep runs do not regrid");
    Track a = start_track(cfg, w0a);
    Track b = start_track(cfg, w0b);
    const Geometry geo(*cfg.grid, cfg.dim);
    const std::vector<double> sched = schedule_times(cfg);
    std::size_t next_sched = 0;
    double t = 0.0;
    std::optional<Termination> ta, tb;
    StencilMask mask(cfg.grid->size(), 0);
    while (!ta && !tb) {
        if (a.run.steps >= cfg.max_steps) {
            ta = tb = Termination::TimeCap;
            break;
        }
        double dt = std::min(cfg.dt_max, cfg.dt_safety / std::max({a.S, b.S, 1e-300}));
        double t_next = t + dt;
        bool hit_sched = false;
        if (next_sched < sched.size() && t_next >= sched[next_sched]) {
            t_next = sched[next_sched];
            hit_sched = true;
        }
        if (t_next >= cfg.time_cap) t_next = cfg.time_cap;
        dt = t_next - t;
        std::fill(mask.begin(), mask.end(), 0);
        if (cfg.upwind) {
            mask_into(geo, *cfg.grid, a.w, mask);
            mask_into(geo, *cfg.grid, b.w, mask);
        }
        StepStats sa, sb;
        std::vector<double> na, nb;
        try {
            na = advance(geo, *cfg.grid, a.w, dt, cfg, &mask, sa);
            nb = advance(geo, *cfg.grid, b.w, dt, cfg, &mask, sb);
        } catch (const Error& e) {
            ta = tb = Termination::StepFailed;
            a.run.message = b.run.message = e.what();
            break;
        }
        t = t_next;
        bool snap_a = false, snap_b = false;
        after_step(a, std::move(na), t, dt, sa, snap_a, ta);
        after_step(b, std::move(nb), t, dt, sb, snap_b, tb);
        if (hit_sched) ++next_sched;
        if (snap_a || snap_b || hit_sched) {
            a.snapshot(t, cfg.dim);
            b.snapshot(t, cfg.dim);
        }
    }
    // the pair stops together; the run that did not trigger keeps its own state
    a.run.termination = ta.value_or(tb ? (*tb == Termination::BlowupDetected ? Termination::TimeCap : *tb) : Termination::TimeCap);
    b.run.termination = tb.value_or(ta ? (*ta == Termination::BlowupDetected ? Termination::TimeCap : *ta) : Termination::TimeCap);
    a.record(t, true);
    b.record(t, true);
    a.snapshot(t, cfg.dim);
    b.snapshot(t, cfg.dim);
    return {std::move(a.run), std::move(b.run)};
}

BlowupEstimate estimate_blowup_time(std::span<const SupnormSample> h) {
    if (h.size() < 10) throw Error(ErrorCode::NotEnoughData, "need at least 10 sup-norm samples");
    double smin = std::numeric_limits<double>::infinity(), smax = 0.0;
    for (const auto& s : h) {
        smin = std::min(smin, s.supnorm);
        smax = std::max(smax, s.supnorm);
    }
    if (!(smin > 0.0) || smax < 10.0 * smin)
        throw Error(ErrorCode::EstimateUnreliable, "sup-norm grew less than 10x");
    const double last = h.back().supnorm;
    std::size_t first = h.size() - 1;
    while (first > 0 && h[first - 1].supnorm >= last / 10.0) --first;
    for (std::size_t i = first; i + 1 < h.size(); ++i)
        if (h[i + 1].supnorm < h[i].supnorm || h[i + 1].t <= h[i].t)
            throw Error(ErrorCode::EstimateUnreliable, "sup-norm tail is not monotone");
    // the decade must hold enough points for a line fit
    if (h.size() - first < 3) first = h.size() >= 3 ? h.size() - 3 : 0;
    std::vector<double> t, y;
    for (std::size_t i = first; i < h.size(); ++i) {
        t.push_back(h[i].t);
        y.push_back(1.0 / h[i].supnorm);
    }
    const num::LineFit fit = num::fit_line(t, y);
    if (!(fit.slope < 0.0)) throw Error(ErrorCode::EstimateUnreliable, "1/sup-norm is not decreasing");
    BlowupEstimate est;
    est.T_est = -fit.intercept / fit.slope;
    est.rate_constant = fit.slope;
    est.fit_residual = fit.rms_residual;
    est.samples_used = t.size();
    if (!(est.T_est > h.back().t)) throw Error(ErrorCode::EstimateUnreliable, "fitted root precedes the last sample");
    return est;
}

SelfSimilarFrameField rescale_to_selfsimilar(const Snapshot& snap, double T) {
    if (!(snap.t < T)) throw Error(ErrorCode::InvalidFrame, "snapshot time must precede T");
    const double gap = T - snap.t;
    const double root = std::sqrt(gap);
    SelfSimilarFrameField out;
    out.tau = -std::log(gap);
    const auto nodes = snap.w.grid().nodes();
    out.xi.resize(nodes.size());
    out.v.resize(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        out.xi[i] = nodes[i] / root;
        out.v[i] = gap * snap.w[i];
    }
    return out;
}

bool comparison_check(const BlowupRun& a, const BlowupRun& b, double tol) {
    if (a.snapshots.empty() || b.snapshots.empty()) throw Error(ErrorCode::IncompatibleRuns, "runs without snapshots");
    std::size_t shared = 0;
    std::size_t j = 0;
    for (const Snapshot& sa : a.snapshots) {
        while (j < b.snapshots.size() && b.snapshots[j].t < sa.t - 1e-12 * std::max(1.0, std::abs(sa.t))) ++j;
        if (j == b.snapshots.size()) break;
        const Snapshot& sb = b.snapshots[j];
        if (std::abs(sb.t - sa.t) > 1e-12 * std::max(1.0, std::abs(sa.t))) continue;
        if (!(sa.w.grid() == sb.w.grid())) throw Error(ErrorCode::IncompatibleRuns, "runs use different grids");
        ++shared;
        for (std::size_t i = 0; i < sa.w.size(); ++i)
            if (sa.w[i] > sb.w[i] + tol) return false;
    }
    if (shared == 0) throw Error(ErrorCode::IncompatibleRuns, "runs share no snapshot times");
    return true;
}

}  // namespace kslab
