#include "kslab/profile.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <cmath>
#include <sstream>

#include "kslab/numerics.hpp"
#include "kslab/ode.hpp"

namespace kslab {

double V_denominator(double V, double s, Dimension dim) {
    return 0.5 + (5.0 - dim.as_double()) * s * s - V * s * s;
}

double F_rhs(double V, double s, Dimension dim) {
    const double den = V_denominator(V, s, dim);
    if (std::abs(den) <= 1e-12) throw SingularDenominatorError(s, V);
    return (dim.as_double() - 2.0) * (2.0 * V * s - V * V * s) / den;
}

double V_curvature_coefficient(double m, Dimension dim) {
    return (dim.as_double() - 2.0) * m * (2.0 - m);
}

std::string to_string(VTermination t) {
    switch (t) {
    case VTermination::ReachedSmax: return "ReachedSmax";
    case VTermination::DenominatorSingular: return "DenominatorSingular";
    case VTermination::Diverged: return "Diverged";
    case VTermination::NonPositive: return "NonPositive";
    case VTermination::MonotoneTurn: return "MonotoneTurn";
    case VTermination::StepFailed: return "StepFailed";
    }
    return "Unknown";
}

std::string to_string(Classification c) {
    switch (c) {
    case Classification::Unbounded: return "Unbounded";
    case Classification::TouchesZero: return "TouchesZero";
    case Classification::Regular: return "Regular";
    case Classification::Indeterminate: return "Indeterminate";
    }
    return "Unknown";
}

namespace {

struct Taylor {
    double m, a, b;
    double value(double s) const { return m + s * s * (a + b * s * s); }
    double slope(double s) const { return s * (2.0 * a + 4.0 * b * s * s); }
};

Taylor taylor_start(double m, Dimension dim) {
    const double n = dim.as_double();
    const double a = V_curvature_coefficient(m, dim);
    const double b = -a * (6.0 - n - m - (n - 2.0) * (1.0 - m));
    return {m, a, b};
}

}  // namespace

double VSolution::value_at(double q) const {
    if (s.size() < 2) throw Error(ErrorCode::NotEnoughData, "empty V solution");
    if (q < 0.0 || q > s.back()) throw Error(ErrorCode::InvalidArgument, "s outside the computed range");
    if (q <= s[1]) {
        const Taylor t = taylor_start(m, Dimension(dim));
        return t.value(q);
    }
    return num::hermite(s, V, dV, q);
}

VSolution solve_V_ivp(TailCoefficient mc, Dimension dim, double s_max, double tol, const VOptions& opt) {
    if (!(s_max > 0.0)) throw Error(ErrorCode::InvalidArgument, "s_max must be positive");
    if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be positive");
    const double m = mc.value();
    const double n = dim.as_double();
    const Taylor ts = taylor_start(m, dim);
    const double s0 = opt.start_fraction * s_max;

    VSolution out;
    out.m = m;
    out.dim = dim.value();
    out.s = {0.0, s0};
    out.V = {m, ts.value(s0)};
    out.dV = {0.0, ts.slope(s0)};

    auto rhs = [n](double s, std::span<const double> y, std::span<double> d) {
        const double den = 0.5 + (5.0 - n) * s * s - y[0] * s * s;
        const double num = (n - 2.0) * s * y[0] * (2.0 - y[0]);
        d[0] = y[1];
        d[1] = (num - den * y[1]) / (s * s * s);
    };
    auto jac = [n](double s, std::span<const double> y, std::span<double> j) {
        const double s3 = s * s * s;
        const double den = 0.5 + (5.0 - n) * s * s - y[0] * s * s;
        j[0] = 0.0;
        j[1] = 1.0;
        j[2] = ((n - 2.0) * s * (2.0 - 2.0 * y[0]) + s * s * y[1]) / s3;
        j[3] = -den / s3;
    };

    const int trend = m < 2.0 ? 1 : (m > 2.0 ? -1 : 0);
    VTermination reason = VTermination::ReachedSmax;
    auto on_step = [&](double s, std::span<const double> y) {
        if (!std::isfinite(y[0]) || std::abs(y[0]) > opt.cap) {
            reason = VTermination::Diverged;
            return false;
        }
        if (y[0] <= 0.0) {
            reason = VTermination::NonPositive;
            return false;
        }
        if (trend * y[1] < 0.0) {
            reason = VTermination::MonotoneTurn;
            return false;
        }
        const double den = V_denominator(y[0], s, dim);
        if (den <= 0.0) {
            reason = VTermination::DenominatorSingular;
            return false;
        }
        out.s.push_back(s);
        out.V.push_back(y[0]);
        out.dV.push_back(y[1]);
        if (den <= opt.den_min) {
            reason = VTermination::DenominatorSingular;
            return false;
        }
        return true;
    };

    if (V_denominator(out.V[1], s0, dim) <= opt.den_min) {
        out.terminal_reason = VTermination::DenominatorSingular;
        return out;
    }
    ode::Options o;
    o.rtol = tol;
    o.atol = tol;
    o.h_init = 0.01 * s0;
    o.h_max_rel = opt.max_step_rel;
    const ode::Result r = ode::radau5(rhs, jac, s0, {out.V[1], out.dV[1]}, s_max, o, on_step);
    if (r.status == ode::Status::Interrupted)
        out.terminal_reason = reason;
    else if (r.status != ode::Status::Completed)
        out.terminal_reason = VTermination::StepFailed;
    return out;
}

VSolution solve_first_order_ivp(TailCoefficient mc, Dimension dim, double s_max, double tol, const VOptions& opt) {
    if (!(s_max > 0.0)) throw Error(ErrorCode::InvalidArgument, "s_max must be positive");
    const double m = mc.value();
    const double a = V_curvature_coefficient(m, dim);
    const double s0 = opt.start_fraction * s_max;
    VSolution out;
    out.m = m;
    out.dim = dim.value();
    const double v0 = m + a * s0 * s0;
    out.s = {0.0, s0};
    out.V = {m, v0};
    out.dV = {0.0, F_rhs(v0, s0, dim)};

    bool singular = false;
    auto rhs = [&](double s, std::span<const double> y, std::span<double> d) {
        try {
            d[0] = F_rhs(y[0], s, dim);
        } catch (const SingularDenominatorError&) {
            singular = true;
            d[0] = std::numeric_limits<double>::quiet_NaN();
        }
    };
    VTermination reason = VTermination::ReachedSmax;
    auto on_step = [&](const ode::DopriDense& d) {
        const double s = d.t_new();
        const double v = d.y_new()[0];
        if (!std::isfinite(v) || std::abs(v) > opt.cap) {
            reason = VTermination::Diverged;
            return false;
        }
        if (v <= 0.0) {
            reason = VTermination::NonPositive;
            return false;
        }
        const double den = V_denominator(v, s, dim);
        if (den <= 0.0) {
            reason = VTermination::DenominatorSingular;
            return false;
        }
        out.s.push_back(s);
        out.V.push_back(v);
        out.dV.push_back(F_rhs(v, s, dim));
        if (den <= opt.den_min) {
            reason = VTermination::DenominatorSingular;
            return false;
        }
        return true;
    };
    ode::Options o;
    o.rtol = tol;
    o.atol = tol;
    o.h_init = 0.01 * s0;
    o.h_max_rel = opt.max_step_rel;
    const ode::Result r = ode::dopri5(rhs, s0, {v0}, s_max, o, on_step);
    if (r.status == ode::Status::Interrupted)
        out.terminal_reason = reason;
    else if (singular)
        out.terminal_reason = VTermination::DenominatorSingular;
    else if (r.status != ode::Status::Completed)
        out.terminal_reason = VTermination::StepFailed;
    return out;
}

double SelfSimilarProfile::tail_error() const {
    if (xi.empty()) return std::numeric_limits<double>::infinity();
    return std::abs(xi.front() * xi.front() * phi.front() - m);
}

double SelfSimilarProfile::value(double x) const {
    if (xi.empty()) throw Error(ErrorCode::NotEnoughData, "empty profile");
    if (x >= xi.front()) {
        const double x2 = x * x;
        return (m + tail_a / x2) / x2;
    }
    if (x <= ell) return extension_value;
    if (x <= xi.back()) {
        if (classification == Classification::Unbounded) {
            // below the last sample of an unbounded profile: continue the local xi^-2 law
            const double xm = xi.back();
            return phi.back() * (xm / x) * (xm / x);
        }
        return classification == Classification::Regular ? extension_value : phi.back();
    }
    // xi is decreasing: find i with xi[i] >= x > xi[i+1]
    const auto it = std::upper_bound(xi.begin(), xi.end(), x, std::greater<double>());
    std::size_t i = static_cast<std::size_t>(it - xi.begin());
    i = std::clamp<std::size_t>(i, 1, xi.size() - 1) - 1;
    // Hermite interpolation of g = xi^2 phi between xi[i+1] < xi[i]
    const double x0 = xi[i + 1], x1 = xi[i];
    const double g0 = x0 * x0 * phi[i + 1], g1 = x1 * x1 * phi[i];
    const double d0 = 2.0 * x0 * phi[i + 1] + x0 * x0 * dphi[i + 1];
    const double d1 = 2.0 * x1 * phi[i] + x1 * x1 * dphi[i];
    const std::array<double, 2> xs{x0, x1}, gs{g0, g1}, ds{d0, d1};
    return num::hermite(xs, gs, ds, x) / (x * x);
}

SelfSimilarProfile phi_from_V(const VSolution& v) {
    SelfSimilarProfile p;
    p.m = v.m;
    p.dim = v.dim;
    p.tail_a = V_curvature_coefficient(v.m, Dimension(v.dim));
    for (std::size_t i = 1; i < v.s.size(); ++i) {
        const double s = v.s[i];
        const double s2 = s * s;
        p.xi.push_back(1.0 / s);
        p.phi.push_back(v.V[i] * s2);
        p.dphi.push_back(-(v.dV[i] * s2 * s2 + 2.0 * v.V[i] * s2 * s));
    }
    if (p.xi.empty()) throw Error(ErrorCode::NotEnoughData, "V solution has no samples");
    p.ell = p.xi.back();
    p.diagnostics = "V: " + to_string(v.terminal_reason);
    return p;
}

SelfSimilarProfile continue_phi(SelfSimilarProfile p, const ContinuationCaps& caps) {
    if (p.xi.empty()) throw Error(ErrorCode::NotEnoughData, "empty profile");
    const double n = static_cast<double>(p.dim);
    auto rhs = [n](double x, std::span<const double> y, std::span<double> d) {
        d[0] = y[1];
        d[1] = -((n + 1.0) / x - 0.5 * x) * y[1] + y[0] - y[0] * (x * y[1] + n * y[0]);
    };
    const double x0 = p.xi.back();
    std::ostringstream diag;
    diag << p.diagnostics;

    if (p.phi.back() <= caps.zero_tol) {
        p.classification = Classification::TouchesZero;
        p.ell = x0;
        p.extension_value = 0.0;
        return p;
    }
    if (x0 <= caps.xi_floor) {
        p.classification = Classification::Indeterminate;
        p.diagnostics = diag.str() + "; starts below xi_floor";
        return p;
    }

    Classification cls = Classification::Indeterminate;
    double ell = 0.0;
    auto on_step = [&](const ode::DopriDense& d) {
        const double xn = d.t_new();
        const double ph = d.y_new()[0];
        if (!(ph > caps.zero_tol)) {
            // phi crossed zero_tol inside this step; bisect on the dense output
            double hi = d.t_old(), lo = xn;
            for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (d.eval(mid, 0) > caps.zero_tol)
                    hi = mid;
                else
                    lo = mid;
            }
            ell = 0.5 * (lo + hi);
            p.xi.push_back(ell);
            p.phi.push_back(std::max(d.eval(ell, 0), 0.0));
            p.dphi.push_back(d.eval(ell, 1));
            cls = Classification::TouchesZero;
            return false;
        }
        p.xi.push_back(xn);
        p.phi.push_back(ph);
        p.dphi.push_back(d.y_new()[1]);
        if (ph >= caps.phi_cap) {
            const double g_old = 1.0 / std::sqrt(d.eval(d.t_old(), 0));
            const double g_new = 1.0 / std::sqrt(ph);
            double root = xn;
            if (g_old > g_new) root = xn - g_new * (d.t_old() - xn) / (g_old - g_new);
            ell = root < caps.xi_floor ? 0.0 : std::max(root, 0.0);
            cls = Classification::Unbounded;
            return false;
        }
        return true;
    };
    ode::Options o;
    o.rtol = caps.tol;
    o.atol = caps.tol * 1e-4;
    o.h_init = caps.max_step_rel * x0;
    o.h_max_rel = caps.max_step_rel;
    const ode::Result r = ode::dopri5(rhs, x0, {p.phi.back(), p.dphi.back()}, caps.xi_floor, o, on_step);

    if (r.status == ode::Status::Interrupted) {
        p.classification = cls;
        p.ell = ell;
        p.extension_value = cls == Classification::TouchesZero ? 0.0 : std::numeric_limits<double>::infinity();
    } else if (r.status == ode::Status::Completed) {
        // reached xi_floor with bounded phi: Regular only if phi' is small and shrinking
        const std::size_t last = p.xi.size() - 1;
        const double xf = p.xi[last];
        const double dpf = std::abs(p.dphi[last]);
        const auto it = std::find_if(p.xi.begin(), p.xi.end(), [&](double x) { return x <= 10.0 * xf; });
        const double dp10 = std::abs(p.dphi[static_cast<std::size_t>(it - p.xi.begin())]);
        const bool positive = p.phi[last] > 0.0;
        if (positive && dpf <= dp10 && dpf * xf <= 1e-6 * std::max(1.0, p.phi[last])) {
            p.classification = Classification::Regular;
            p.ell = 0.0;
            p.extension_value = p.phi[last] - xf * p.dphi[last];
        } else {
            p.classification = Classification::Indeterminate;
            diag << "; reached xi_floor without a vanishing phi' trend";
        }
    } else {
        p.classification = Classification::Indeterminate;
        diag << "; continuation stopped: " << ode::to_string(r.status) << " at xi=" << r.t;
    }
    p.diagnostics = diag.str();
    return p;
}

SelfSimilarProfile build_profile(TailCoefficient m, Dimension dim, const ProfileOptions& opt) {
    auto one = [&](double tol) {
        VSolution v = solve_V_ivp(m, dim, opt.s_max, tol, opt.v);
        ContinuationCaps caps = opt.caps;
        caps.tol = tol;
        return continue_phi(phi_from_V(v), caps);
    };
    SelfSimilarProfile coarse = one(opt.tol);
    SelfSimilarProfile fine = one(0.5 * opt.tol);
    if (coarse.classification != fine.classification) {
        fine.diagnostics += "; classification changed under tolerance halving (" +
                            to_string(coarse.classification) + " -> " + to_string(fine.classification) + ")";
        fine.classification = Classification::Indeterminate;
    }
    return fine;
}

namespace {

void increasing_copy(std::span<const double> xi, std::span<const double> phi, std::vector<double>& x,
                     std::vector<double>& f) {
    x.assign(xi.begin(), xi.end());
    f.assign(phi.begin(), phi.end());
    if (x.size() >= 2 && x.front() > x.back()) {
        std::reverse(x.begin(), x.end());
        std::reverse(f.begin(), f.end());
    }
    // drop duplicated abscissae (e.g. a junction sample recorded twice)
    std::size_t k = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (k > 0 && !(x[i] > x[k - 1])) continue;
        x[k] = x[i];
        f[k] = f[i];
        ++k;
    }
    x.resize(k);
    f.resize(k);
}

}  // namespace

double residual_phi(std::span<const double> xi_in, std::span<const double> phi_in, Dimension dim) {
    if (xi_in.size() != phi_in.size()) throw Error(ErrorCode::InvalidArgument, "xi and phi sizes differ");
    std::vector<double> xi, phi;
    increasing_copy(xi_in, phi_in, xi, phi);
    if (xi.size() < 5) throw Error(ErrorCode::TooCoarse, "residual_phi needs at least 5 samples");
    const auto [d1, d2] = num::derivatives_5pt(xi, phi);
    const double n = dim.as_double();
    double worst = 0.0;
    for (std::size_t i = 2; i + 2 < xi.size(); ++i) {
        const double x = xi[i];
        const double f = phi[i];
        const double t1 = d2[i];
        const double t2 = (n + 1.0) / x * d1[i];
        const double t3 = 0.5 * x * d1[i];
        const double t4 = f;
        const double t5 = f * x * d1[i];
        const double t6 = n * f * f;
        const double res = t1 + t2 - t3 - t4 + t5 + t6;
        const double scale = std::max({1.0, std::abs(t1), std::abs(t2), std::abs(t3), std::abs(t4),
                                       std::abs(t5), std::abs(t6)});
        worst = std::max(worst, std::abs(res) / scale);
    }
    return worst;
}

double residual_phi(const SelfSimilarProfile& p, Dimension dim) {
    return residual_phi(p.xi, p.phi, dim);
}

double weighted_flux_check(std::span<const double> xi_in, std::span<const double> phi_in, Dimension dim) {
    if (xi_in.size() != phi_in.size()) throw Error(ErrorCode::InvalidArgument, "xi and phi sizes differ");
    std::vector<double> xi, phi;
    increasing_copy(xi_in, phi_in, xi, phi);
    if (xi.size() < 5) throw Error(ErrorCode::TooCoarse, "weighted_flux_check needs at least 5 samples");
    const double n = dim.as_double();
    const auto [d1, d2] = num::derivatives_5pt(xi, phi);
    (void)d2;
    const std::size_t k = xi.size();
    std::vector<double> flux(k), src(k);
    double int_rho_phi = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        if (i > 0) int_rho_phi += 0.5 * (xi[i] - xi[i - 1]) * (xi[i] * phi[i] + xi[i - 1] * phi[i - 1]);
        const double log_a = -(xi[i] * xi[i] - xi[0] * xi[0]) / 4.0 + int_rho_phi;
        const double w = std::exp((n + 1.0) * std::log(xi[i]) + log_a);
        flux[i] = w * d1[i];
        src[i] = w * phi[i] * (1.0 - n * phi[i]);
    }
    double scale = 0.0, worst = 0.0, integral = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        if (i > 0) integral += 0.5 * (xi[i] - xi[i - 1]) * (src[i] + src[i - 1]);
        scale = std::max({scale, std::abs(flux[i]), std::abs(integral)});
        worst = std::max(worst, std::abs(flux[i] - flux[0] - integral));
    }
    return scale > 0.0 ? worst / scale : 0.0;
}

double weighted_flux_check(const SelfSimilarProfile& p, Dimension dim) {
    return weighted_flux_check(p.xi, p.phi, dim);
}

}  // namespace kslab
