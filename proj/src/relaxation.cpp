#include "kslab/relaxation.hpp"

#include <algorithm>
#include <cmath>

#include "kslab/numerics.hpp"

namespace kslab {

namespace {

struct Tridiag {
    std::vector<double> lo, di, up;
    explicit Tridiag(std::size_t n) : lo(n, 0.0), di(n, 0.0), up(n, 0.0) {}
};

// Jacobian of G at h; boundary rows are left zero.
Tridiag operator_jacobian(std::span<const double> s, std::span<const double> h, Dimension dim) {
    const std::size_t n = s.size();
    const double nn = dim.as_double();
    const double d = s[1] - s[0];
    Tridiag j(n);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double si = s[i];
        const double s3 = si * si * si;
        const double den = 0.5 + (5.0 - nn) * si * si - h[i] * si * si;
        const double d1 = (h[i + 1] - h[i - 1]) / (2.0 * d);
        j.lo[i] = 1.0 / (d * d) - den / (2.0 * d * s3);
        j.up[i] = 1.0 / (d * d) + den / (2.0 * d * s3);
        j.di[i] = -2.0 / (d * d) + (-d1 * si * si - (nn - 2.0) * si * (2.0 - 2.0 * h[i])) / s3;
    }
    return j;
}

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

std::vector<double> relaxation_operator(std::span<const double> s, std::span<const double> h, Dimension dim) {
    const std::size_t n = s.size();
    const double nn = dim.as_double();
    const double d = s[1] - s[0];
    std::vector<double> g(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double si = s[i];
        const double den = 0.5 + (5.0 - nn) * si * si - h[i] * si * si;
        const double d1 = (h[i + 1] - h[i - 1]) / (2.0 * d);
        const double d2 = (h[i + 1] - 2.0 * h[i] + h[i - 1]) / (d * d);
        g[i] = d2 + (d1 * den - (nn - 2.0) * si * h[i] * (2.0 - h[i])) / (si * si * si);
    }
    return g;
}

RelaxationResult h_relaxation_oracle(TailCoefficient mc, Dimension dim, double eps, double Lm, double t_end,
                                     const RelaxationOptions& opt) {
    if (mc.degenerate()) throw Error(ErrorCode::DegenerateTail, "m = 2 has the constant profile V = 2");
    if (!(eps > 0.0) || !(Lm > eps)) throw Error(ErrorCode::InvalidArgument, "need 0 < eps < Lm");
    if (!(t_end > 0.0)) throw Error(ErrorCode::InvalidArgument, "t_end must be positive");
    const double m = mc.value();
    const int trend = m < 2.0 ? 1 : -1;

    GridPtr grid = make_grid(RadialGrid::annulus(eps, Lm, opt.intervals));
    const std::span<const double> s = grid->nodes();
    const std::size_t n = s.size();

    const VSolution vstar = solve_V_ivp(mc, dim, Lm, opt.ivp_tol);
    if (vstar.s_terminal() < Lm) throw Error(ErrorCode::InvalidArgument, "Lm lies beyond the IVP validity range");

    RelaxationResult res{RadialField(grid, std::vector<double>(n, 0.0), 0.0), {}};
    res.reference.resize(n);
    for (std::size_t i = 0; i < n; ++i) res.reference[i] = vstar.value_at(s[i]);
    res.reference_residual = max_abs(relaxation_operator(s, res.reference, dim));

    std::vector<double> h(n);
    if (opt.seed == RelaxationSeed::IvpPerturbed) {
        // g solves J g = -1 with zero boundary values; J is an M-matrix here so g >= 0.
        Tridiag j = operator_jacobian(s, res.reference, dim);
        std::vector<double> rhs(n, -1.0), g(n, 0.0);
        j.di[0] = j.di[n - 1] = 1.0;
        j.up[0] = j.lo[n - 1] = 0.0;
        rhs[0] = rhs[n - 1] = 0.0;
        if (!num::solve_tridiagonal(j.lo, j.di, j.up, rhs, g))
            throw Error(ErrorCode::NotConverged, "singular relaxation Jacobian");
        const std::vector<double> gs = num::first_derivative(s, g);
        const std::vector<double> vs = num::first_derivative(s, res.reference);
        double min_slope = std::numeric_limits<double>::infinity();
        for (double v : vs) min_slope = std::min(min_slope, trend * v);
        if (!(min_slope > 0.0))
            throw Error(ErrorCode::InvalidArgument, "IVP solution is not strictly monotone on [eps, Lm]");
        res.kappa = 0.5 * min_slope / max_abs(gs);
        for (std::size_t i = 0; i < n; ++i) h[i] = res.reference[i] - trend * res.kappa * g[i];
    } else {
        const VSolution first = solve_first_order_ivp(mc, dim, Lm, opt.ivp_tol);
        if (first.s_terminal() < Lm)
            throw Error(ErrorCode::InvalidArgument, "Lm lies beyond the first-order IVP range");
        for (std::size_t i = 0; i < n; ++i) h[i] = first.value_at(s[i]);
    }

    auto track_slope = [&](std::span<const double> state) {
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double hs = (state[i + 1] - state[i]) / (s[i + 1] - s[i]);
            res.min_hs = std::min(res.min_hs, hs);
            res.max_hs = std::max(res.max_hs, hs);
        }
    };
    res.min_hs = std::numeric_limits<double>::infinity();
    res.max_hs = -std::numeric_limits<double>::infinity();
    res.min_ht = std::numeric_limits<double>::infinity();
    res.max_ht = -std::numeric_limits<double>::infinity();
    track_slope(h);

    double t = 0.0;
    double dt = opt.dt_initial;
    std::vector<double> next(n), delta(n), r(n);
    bool steady = false;
    while (t < t_end && !steady) {
        dt = std::min(dt, t_end - t);
        next = h;
        bool ok = false;
        for (int it = 0; it < 30; ++it) {
            const std::vector<double> g = relaxation_operator(s, next, dim);
            Tridiag j = operator_jacobian(s, next, dim);
            for (std::size_t i = 1; i + 1 < n; ++i) {
                r[i] = -(next[i] - h[i] - dt * g[i]);
                j.lo[i] *= -dt;
                j.up[i] *= -dt;
                j.di[i] = 1.0 - dt * j.di[i];
            }
            j.di[0] = j.di[n - 1] = 1.0;
            j.up[0] = j.lo[n - 1] = 0.0;
            r[0] = r[n - 1] = 0.0;
            if (!num::solve_tridiagonal(j.lo, j.di, j.up, r, delta)) break;
            for (std::size_t i = 0; i < n; ++i) next[i] += delta[i];
            if (max_abs(delta) <= 1e-14 * std::max(1.0, max_abs(next))) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            dt *= 0.25;
            if (dt < 1e-16) throw Error(ErrorCode::NotConverged, "relaxation Newton iteration failed");
            continue;
        }
        double rate = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ht = (next[i] - h[i]) / dt;
            res.min_ht = std::min(res.min_ht, ht);
            res.max_ht = std::max(res.max_ht, ht);
            rate = std::max(rate, std::abs(ht));
        }
        h.swap(next);
        t += dt;
        ++res.steps;
        track_slope(h);
        steady = rate <= opt.steady_tol;
        dt = std::min(dt * opt.dt_growth, opt.dt_max);
    }
    res.t_final = t;
    res.h = RadialField(grid, h, t);
    for (std::size_t i = 0; i < n; ++i)
        res.max_rel_diff = std::max(res.max_rel_diff, std::abs(h[i] - res.reference[i]) / std::abs(res.reference[i]));
    if (!steady) throw Error(ErrorCode::NotConverged, "no steady state by t_end");
    return res;
}

}  // namespace kslab
