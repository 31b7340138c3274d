#include "kslab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kslab/numerics.hpp"

namespace kslab {

namespace {

std::vector<std::size_t> last_before(const BlowupRun& run, double T, std::size_t count) {
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < run.snapshots.size(); ++k)
        if (run.snapshots[k].t < T) idx.push_back(k);
    if (idx.size() < 3) throw Error(ErrorCode::NotEnoughData, "need at least 3 snapshots before T");
    if (idx.size() > count) idx.erase(idx.begin(), idx.end() - static_cast<std::ptrdiff_t>(std::max<std::size_t>(count, 3)));
    return idx;
}

// Cubic Hermite through the nodes with fourth-order node slopes; PCHIP is only
// second-order accurate and falls back in for very small grids.
class Interp {
public:
    explicit Interp(const RadialField& f)
        : x_(f.grid().nodes().begin(), f.grid().nodes().end()), v_(f.values().begin(), f.values().end()) {
        if (x_.size() >= 5) {
            d_ = num::derivatives_5pt(x_, v_).first;
        } else {
            pchip_ = num::Pchip(x_, v_);
        }
    }
    double operator()(double r) const { return d_.empty() ? pchip_(r) : num::hermite(x_, v_, d_, r); }

private:
    std::vector<double> x_, v_, d_;
    num::Pchip pchip_;
};

Interp interpolant(const RadialField& f) { return Interp(f); }

void check_radii(std::span<const double> radii) {
    if (radii.empty()) throw Error(ErrorCode::InvalidArgument, "no radii");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > 0.0)) throw Error(ErrorCode::InvalidArgument, "radii must be positive");
        if (i > 0 && !(radii[i] > radii[i - 1])) throw Error(ErrorCode::InvalidArgument, "radii must increase");
    }
}

struct Fit {
    std::vector<double> value, rms, rel;
};

Fit fit_limits(const std::vector<Interp>& fields, const std::vector<double>& gaps, std::span<const double> radii) {
    Fit out;
    std::vector<double> y(gaps.size());
    for (double r : radii) {
        for (std::size_t k = 0; k < fields.size(); ++k) y[k] = fields[k](r);
        const num::LineFit f = num::fit_line(gaps, y);
        out.value.push_back(f.intercept);
        out.rms.push_back(f.rms_residual);
        double scale = std::abs(f.intercept);
        for (double v : y) scale = std::max(scale, std::abs(v));
        out.rel.push_back(scale > 0.0 ? f.rms_residual / scale : 0.0);
    }
    return out;
}

}  // namespace

std::vector<double> log_radii(double lo, double hi, std::size_t count) {
    if (!(lo > 0.0) || !(hi > lo) || count < 2) throw Error(ErrorCode::InvalidArgument, "need 0 < lo < hi, count >= 2");
    std::vector<double> r(count);
    const double step = std::log(hi / lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) r[i] = lo * std::exp(step * static_cast<double>(i));
    r.front() = lo;
    r.back() = hi;
    return r;
}

WExtraction extract_W(const BlowupRun& run, double T, std::span<const double> radii, std::size_t count,
                      double residual_threshold) {
    check_radii(radii);
    const std::vector<std::size_t> idx = last_before(run, T, count);
    std::vector<Interp> fields;
    std::vector<double> gaps;
    for (std::size_t k : idx) {
        fields.push_back(interpolant(run.snapshots[k].w));
        gaps.push_back(T - run.snapshots[k].t);
    }
    Fit fit = fit_limits(fields, gaps, radii);
    GridPtr g = make_grid(RadialGrid::from_nodes(std::vector<double>(radii.begin(), radii.end())));
    WExtraction out{RadialField(g, fit.value, T), std::move(fit.rms), std::move(fit.rel)};
    out.snapshots_used = idx.size();
    out.converged = std::all_of(out.relative_residual.begin(), out.relative_residual.end(),
                                [&](double r) { return r <= residual_threshold; });
    return out;
}

RadialField extrapolate_u(const BlowupRun& run, double T, std::span<const double> radii, std::size_t count) {
    check_radii(radii);
    const std::vector<std::size_t> idx = last_before(run, T, count);
    const Dimension dim = run.config.dim;
    std::vector<Interp> fields;
    std::vector<double> gaps;
    for (std::size_t k : idx) {
        fields.push_back(interpolant(u_from_w(run.snapshots[k].w, dim)));
        gaps.push_back(T - run.snapshots[k].t);
    }
    const Fit fit = fit_limits(fields, gaps, radii);
    GridPtr g = make_grid(RadialGrid::from_nodes(std::vector<double>(radii.begin(), radii.end())));
    return RadialField(g, fit.value, T);
}

RadialField extract_U(const RadialField& W, Dimension dim) {
    return u_from_w(W, dim);
}

Regularity regularity_of(const RadialField& w, Dimension dim) {
    Regularity reg;
    const auto r = w.grid().nodes();
    if (r.size() < 4) throw Error(ErrorCode::TooCoarse, "regularity needs at least 4 nodes");
    const std::vector<double> wrr = num::second_derivative(r, w.values());
    const RadialField u = u_from_w(w, dim);
    const std::vector<double> ur = num::first_derivative(r, u.values());
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double r2 = r[i] * r[i];
        reg.c4 = std::max(reg.c4, r2 * r2 * std::max(0.0, -wrr[i]));
        reg.c3 = std::max(reg.c3, r2 * r[i] * std::max(0.0, -ur[i]));
    }
    reg.c4_per_snapshot = {reg.c4};
    reg.c3_per_snapshot = {reg.c3};
    return reg;
}

Regularity regularity_diagnostics(const BlowupRun& run, Dimension dim) {
    if (run.snapshots.empty()) throw Error(ErrorCode::NotEnoughData, "run has no snapshots");
    Regularity reg;
    for (const Snapshot& s : run.snapshots) {
        const Regularity one = regularity_of(s.w, dim);
        reg.c4 = std::max(reg.c4, one.c4);
        reg.c3 = std::max(reg.c3, one.c3);
        reg.c4_per_snapshot.push_back(one.c4);
        reg.c3_per_snapshot.push_back(one.c3);
    }
    return reg;
}

ProfileReport alpha_estimates(const RadialField& W, const RadialField& U, Dimension dim,
                              std::pair<double, double> window, std::size_t samples) {
    if (!(W.grid() == U.grid())) throw Error(ErrorCode::InvalidArgument, "W and U must share radii");
    const auto [lo, hi] = window;
    if (!(lo > 0.0) || !(hi >= 4.0 * lo)) throw Error(ErrorCode::InvalidWindow, "window needs r_hi / r_lo >= 4");
    const RadialGrid& g = W.grid();
    const double eps = 1e-12 * g.r_max();
    if (lo < g.r_min() - eps || hi > g.r_max() + eps || W.size() < 2)
        throw Error(ErrorCode::InvalidWindow, "window lies outside the sampled radii");
    const Interp wi = interpolant(W);
    const Interp ui = interpolant(U);
    std::vector<double> r2w, r2u;
    for (double r : log_radii(lo, hi, std::max<std::size_t>(samples, 2))) {
        r2w.push_back(r * r * wi(r));
        r2u.push_back(r * r * ui(r));
    }
    ProfileReport rep;
    rep.radii.assign(g.nodes().begin(), g.nodes().end());
    rep.W_values.assign(W.values().begin(), W.values().end());
    rep.U_values.assign(U.values().begin(), U.values().end());
    rep.window_lo = lo;
    rep.window_hi = hi;
    rep.alpha_from_U = num::median(r2u);
    rep.alpha_from_W = (dim.as_double() - 2.0) * num::median(r2w);
    const auto [mn, mx] = std::minmax_element(r2u.begin(), r2u.end());
    rep.plateau_ratio = *mn > 0.0 ? *mx / *mn : std::numeric_limits<double>::infinity();
    const double denom = std::max(std::abs(rep.alpha_from_U), std::abs(rep.alpha_from_W));
    rep.mismatch = denom > 0.0 ? std::abs(rep.alpha_from_U - rep.alpha_from_W) / denom : 0.0;
    rep.converged = rep.mismatch <= 0.15;
    return rep;
}

double typeB_diagnostic(const BlowupRun& run, double T, std::pair<double, double> xi_window, std::size_t pairs) {
    const auto [a, b] = xi_window;
    if (!(b > a) || a < 0.0) throw Error(ErrorCode::InvalidWindow, "xi window needs 0 <= a < b");
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < run.snapshots.size(); ++k)
        if (run.snapshots[k].t < T) idx.push_back(k);
    if (idx.size() < 3) throw Error(ErrorCode::NotEnoughData, "need at least 3 snapshots before T");
    const std::size_t keep = std::min(idx.size(), std::max<std::size_t>(pairs, 2) + 1);
    idx.erase(idx.begin(), idx.end() - static_cast<std::ptrdiff_t>(keep));
    const Dimension dim = run.config.dim;
    constexpr std::size_t points = 33;
    std::vector<std::vector<double>> rescaled;
    for (std::size_t k : idx) {
        const Snapshot& s = run.snapshots[k];
        const double gap = T - s.t;
        const double root = std::sqrt(gap);
        if (root * b > s.w.grid().r_max()) throw Error(ErrorCode::InvalidWindow, "xi window leaves the grid");
        const Interp u = interpolant(u_from_w(s.w, dim));
        std::vector<double> f(points);
        for (std::size_t j = 0; j < points; ++j) {
            const double xi = a + (b - a) * static_cast<double>(j) / static_cast<double>(points - 1);
            f[j] = gap * u(root * xi);
        }
        rescaled.push_back(std::move(f));
    }
    double worst = 0.0;
    for (std::size_t k = 0; k + 1 < rescaled.size(); ++k)
        for (std::size_t j = 0; j < points; ++j) worst = std::max(worst, std::abs(rescaled[k + 1][j] - rescaled[k][j]));
    return worst;
}

std::pair<double, double> default_window(const BlowupRun& run, double T, std::size_t count) {
    const std::vector<std::size_t> idx = last_before(run, T, count);
    const RadialGrid& g = run.snapshots.back().w.grid();
    const double core = std::sqrt(T - run.snapshots[idx.front()].t);
    const double lo = 4.0 * std::max(g.smallest_cell(), core);
    return {lo, std::min(10.0 * lo, std::max(0.1 * g.r_max(), 4.0 * lo))};
}

}  // namespace kslab
