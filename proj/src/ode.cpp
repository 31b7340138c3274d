#include "kslab/ode.hpp"

#include <algorithm>
#include <cmath>

namespace kslab::ode {

const char* to_string(Status s) {
    switch (s) {
    case Status::Completed: return "Completed";
    case Status::Interrupted: return "Interrupted";
    case Status::StepUnderflow: return "StepUnderflow";
    case Status::TooManySteps: return "TooManySteps";
    case Status::NonFinite: return "NonFinite";
    case Status::NewtonFailure: return "NewtonFailure";
    }
    return "Unknown";
}

const RadauTableau& radau_iia3() {
    static const RadauTableau t = [] {
        const double s6 = std::sqrt(6.0);
        RadauTableau r{};
        r.a = {{{(88.0 - 7.0 * s6) / 360.0, (296.0 - 169.0 * s6) / 1800.0, (-2.0 + 3.0 * s6) / 225.0},
                {(296.0 + 169.0 * s6) / 1800.0, (88.0 + 7.0 * s6) / 360.0, (-2.0 - 3.0 * s6) / 225.0},
                {(16.0 - s6) / 36.0, (16.0 + s6) / 36.0, 1.0 / 9.0}}};
        r.b = r.a[2];
        r.c = {(4.0 - s6) / 10.0, (4.0 + s6) / 10.0, 1.0};
        return r;
    }();
    return t;
}

const DopriTableau& dopri5_tableau() {
    static const DopriTableau t = [] {
        DopriTableau d{};
        d.c = {0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0};
        d.a[1] = {1.0 / 5.0};
        d.a[2] = {3.0 / 40.0, 9.0 / 40.0};
        d.a[3] = {44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0};
        d.a[4] = {19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0};
        d.a[5] = {9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0};
        d.a[6] = {35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0};
        d.b = {35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0};
        d.b_hat = {5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0,
                   -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0};
        return d;
    }();
    return t;
}

bool solve_dense(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a[i * n + k]) > std::abs(a[piv * n + k])) piv = i;
        if (a[piv * n + k] == 0.0 || !std::isfinite(a[piv * n + k])) return false;
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a[k * n + j], a[piv * n + j]);
            std::swap(b[k], b[piv]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = a[i * n + k] / a[k * n + k];
            if (f == 0.0) continue;
            for (std::size_t j = k; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
            b[i] -= f * b[k];
        }
    }
    for (std::size_t k = n; k-- > 0;) {
        double acc = b[k];
        for (std::size_t j = k + 1; j < n; ++j) acc -= a[k * n + j] * b[j];
        b[k] = acc / a[k * n + k];
    }
    return std::all_of(b.begin(), b.end(), [](double v) { return std::isfinite(v); });
}

namespace {

double error_norm(std::span<const double> err, std::span<const double> y0, std::span<const double> y1,
                  const Options& opt) {
    double acc = 0.0;
    for (std::size_t i = 0; i < err.size(); ++i) {
        const double sc = opt.atol + opt.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        acc += (err[i] / sc) * (err[i] / sc);
    }
    return std::sqrt(acc / static_cast<double>(err.size()));
}

double clamp_step(double h, double t, double t1, const Options& opt) {
    const double dir = t1 >= t ? 1.0 : -1.0;
    double mag = std::min(std::abs(h), opt.h_max);
    if (opt.h_max_rel > 0.0 && t != 0.0) mag = std::min(mag, opt.h_max_rel * std::abs(t));
    mag = std::min(mag, std::abs(t1 - t));
    return dir * mag;
}

bool too_small(double h, double t, const Options& opt) {
    return std::abs(h) <= opt.h_min * std::max(std::abs(t), 1e-300);
}

bool finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// One Radau IIA step with full Newton on the 3n stage increments.
bool radau_step(const Rhs& f, const Jacobian& jac, double t, std::span<const double> y, double h,
                const Options& opt, std::vector<double>& y_out) {
    const RadauTableau& tab = radau_iia3();
    const std::size_t n = y.size();
    const std::size_t m = 3 * n;
    std::vector<double> z(m), f0(n), stage(n), fz(m), jz(3 * n * n), mat(m * m), rhs(m);
    f(t, y, f0);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t k = 0; k < n; ++k) z[i * n + k] = tab.c[i] * h * f0[k];
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 20; ++it) {
        for (std::size_t j = 0; j < 3; ++j) {
            for (std::size_t k = 0; k < n; ++k) stage[k] = y[k] + z[j * n + k];
            const double tj = t + tab.c[j] * h;
            f(tj, stage, std::span<double>(fz).subspan(j * n, n));
            jac(tj, stage, std::span<double>(jz).subspan(j * n * n, n * n));
        }
        if (!finite(fz) || !finite(jz)) return false;
        std::fill(mat.begin(), mat.end(), 0.0);
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t k = 0; k < n; ++k) {
                double g = z[i * n + k];
                for (std::size_t j = 0; j < 3; ++j) g -= h * tab.a[i][j] * fz[j * n + k];
                rhs[i * n + k] = -g;
            }
            for (std::size_t j = 0; j < 3; ++j)
                for (std::size_t k = 0; k < n; ++k)
                    for (std::size_t l = 0; l < n; ++l) {
                        double v = -h * tab.a[i][j] * jz[j * n * n + k * n + l];
                        if (i == j && k == l) v += 1.0;
                        mat[(i * n + k) * m + (j * n + l)] = v;
                    }
        }
        if (!solve_dense(mat, rhs, m)) return false;
        double acc = 0.0;
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t k = 0; k < n; ++k) {
                z[i * n + k] += rhs[i * n + k];
                const double sc = opt.atol + opt.rtol * std::abs(y[k]);
                acc += (rhs[i * n + k] / sc) * (rhs[i * n + k] / sc);
            }
        const double norm = std::sqrt(acc / static_cast<double>(m));
        if (norm < 1e-6) {
            y_out.assign(y.begin(), y.end());
            for (std::size_t k = 0; k < n; ++k) y_out[k] += z[2 * n + k];
            return finite(y_out);
        }
        if (it >= 2 && norm > prev) return false;
        prev = norm;
    }
    return false;
}

}  // namespace

void DopriDense::eval(double t, std::span<double> out) const {
    const double th = (t - t_old_) / h_;
    const double th1 = 1.0 - th;
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = r_[0][i] + th * (r_[1][i] + th1 * (r_[2][i] + th * (r_[3][i] + th1 * r_[4][i])));
}

double DopriDense::eval(double t, std::size_t i) const {
    const double th = (t - t_old_) / h_;
    const double th1 = 1.0 - th;
    return r_[0][i] + th * (r_[1][i] + th1 * (r_[2][i] + th * (r_[3][i] + th1 * r_[4][i])));
}

Result dopri5(const Rhs& f, double t0, std::vector<double> y0, double t1, const Options& opt,
              const std::function<bool(const DopriDense&)>& on_step) {
    // Dense output coefficients of Hairer's DOPRI5.
    constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                     d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                     d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
    const DopriTableau& tab = dopri5_tableau();
    const std::size_t n = y0.size();
    Result res;
    res.t = t0;
    res.y = std::move(y0);
    std::array<std::vector<double>, 7> k;
    for (auto& v : k) v.assign(n, 0.0);
    std::vector<double> tmp(n), y_new(n), err(n);
    DopriDense dense;
    for (auto& v : dense.r_) v.assign(n, 0.0);

    double t = t0;
    double h = opt.h_init > 0.0 ? opt.h_init : 1e-3 * std::abs(t1 - t0);
    f(t, res.y, k[0]);
    if (!finite(k[0])) {
        res.status = Status::NonFinite;
        return res;
    }
    std::size_t steps = 0;
    while (t != t1) {
        if (++steps > opt.max_steps) {
            res.status = Status::TooManySteps;
            break;
        }
        h = clamp_step(h, t, t1, opt);
        if (too_small(h, t, opt)) {
            res.status = Status::StepUnderflow;
            break;
        }
        for (std::size_t s = 1; s < 7; ++s) {
            for (std::size_t i = 0; i < n; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < s; ++j) acc += tab.a[s][j] * k[j][i];
                tmp[i] = res.y[i] + h * acc;
            }
            f(t + tab.c[s] * h, tmp, k[s]);
        }
        // tmp now holds the fifth-order solution (FSAL stage argument)
        y_new = tmp;
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < 7; ++j) acc += (tab.b[j] - tab.b_hat[j]) * k[j][i];
            err[i] = h * acc;
        }
        double norm = error_norm(err, res.y, y_new, opt);
        if (!std::isfinite(norm) || !finite(y_new)) norm = 1e10;
        if (norm <= 1.0) {
            const std::span<const double> yv = res.y;
            for (std::size_t i = 0; i < n; ++i) {
                const double ydiff = y_new[i] - yv[i];
                const double bspl = h * k[0][i] - ydiff;
                dense.r_[0][i] = yv[i];
                dense.r_[1][i] = ydiff;
                dense.r_[2][i] = bspl;
                dense.r_[3][i] = ydiff - h * k[6][i] - bspl;
                dense.r_[4][i] = h * (d1 * k[0][i] + d3 * k[2][i] + d4 * k[3][i] + d5 * k[4][i] +
                                      d6 * k[5][i] + d7 * k[6][i]);
            }
            dense.t_old_ = t;
            dense.h_ = h;
            dense.y_new_ = y_new;
            t = (std::abs(t1 - (t + h)) <= 1e-15 * std::abs(t1)) ? t1 : t + h;
            res.y = y_new;
            res.t = t;
            ++res.accepted;
            k[0] = k[6];
            if (on_step && !on_step(dense)) {
                res.status = Status::Interrupted;
                return res;
            }
            h *= std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(norm, 1e-10), -0.2)));
        } else {
            ++res.rejected;
            h *= std::max(0.2, 0.9 * std::pow(norm, -0.2));
        }
    }
    if (res.status == Status::Completed && t != t1) res.status = Status::Interrupted;
    return res;
}

Result radau5(const Rhs& f, const Jacobian& jac, double t0, std::vector<double> y0, double t1,
              const Options& opt, const std::function<bool(double, std::span<const double>)>& on_step) {
    Result res;
    res.t = t0;
    res.y = std::move(y0);
    std::vector<double> y_full, y_mid, y_two(res.y.size()), err(res.y.size());
    double t = t0;
    double h = opt.h_init > 0.0 ? opt.h_init : 1e-3 * std::abs(t1 - t0);
    std::size_t steps = 0;
    int newton_failures = 0;
    while (t != t1) {
        if (++steps > opt.max_steps) {
            res.status = Status::TooManySteps;
            break;
        }
        h = clamp_step(h, t, t1, opt);
        if (too_small(h, t, opt)) {
            res.status = newton_failures > 0 ? Status::NewtonFailure : Status::StepUnderflow;
            break;
        }
        const bool ok = radau_step(f, jac, t, res.y, h, opt, y_full) &&
                        radau_step(f, jac, t, res.y, 0.5 * h, opt, y_mid) &&
                        radau_step(f, jac, t + 0.5 * h, y_mid, 0.5 * h, opt, y_two);
        if (!ok) {
            ++newton_failures;
            ++res.rejected;
            h *= 0.25;
            continue;
        }
        newton_failures = 0;
        for (std::size_t i = 0; i < err.size(); ++i) err[i] = (y_two[i] - y_full[i]) / 31.0;
        const double norm = error_norm(err, res.y, y_two, opt);
        if (norm <= 1.0) {
            t = (std::abs(t1 - (t + h)) <= 1e-15 * std::abs(t1)) ? t1 : t + h;
            res.y = y_two;
            res.t = t;
            ++res.accepted;
            if (on_step && !on_step(t, res.y)) {
                res.status = Status::Interrupted;
                return res;
            }
            h *= std::min(4.0, std::max(0.2, 0.9 * std::pow(std::max(norm, 1e-12), -1.0 / 6.0)));
        } else {
            ++res.rejected;
            h *= std::max(0.2, 0.9 * std::pow(norm, -1.0 / 6.0));
        }
    }
    return res;
}

}  // namespace kslab::ode
