#include "kslab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kslab::num {

bool solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                       std::span<const double> upper, std::span<const double> rhs,
                       std::span<double> x) {
    const std::size_t n = diag.size();
    if (n == 0) return true;
    std::vector<double> c(n);
    double beta = diag[0];
    if (beta == 0.0 || !std::isfinite(beta)) return false;
    x[0] = rhs[0] / beta;
    for (std::size_t i = 1; i < n; ++i) {
        c[i] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * c[i];
        if (beta == 0.0 || !std::isfinite(beta)) return false;
        x[i] = (rhs[i] - lower[i] * x[i - 1]) / beta;
    }
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= c[i + 1] * x[i + 1];
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(x[i])) return false;
    return true;
}

std::vector<std::vector<double>> fornberg_weights(double z, std::span<const double> x, int order) {
    const int n = static_cast<int>(x.size());
    std::vector<std::vector<double>> c(n, std::vector<double>(order + 1, 0.0));
    double c1 = 1.0;
    double c4 = x[0] - z;
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, order);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - z;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<std::vector<double>> w(order + 1, std::vector<double>(n));
    for (int k = 0; k <= order; ++k)
        for (int j = 0; j < n; ++j) w[k][j] = c[j][k];
    return w;
}

namespace {

double apply(const std::vector<double>& w, std::span<const double> f, std::size_t start) {
    double acc = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) acc += w[j] * f[start + j];
    return acc;
}

}  // namespace

std::vector<double> first_derivative(std::span<const double> x, std::span<const double> f) {
    const std::size_t n = x.size();
    if (n < 3) throw std::invalid_argument("first_derivative needs at least 3 nodes");
    std::vector<double> d(n);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double hm = x[i] - x[i - 1];
        const double hp = x[i + 1] - x[i];
        d[i] = (-hp / (hm * (hm + hp))) * f[i - 1] + ((hp - hm) / (hm * hp)) * f[i] +
               (hm / (hp * (hm + hp))) * f[i + 1];
    }
    d[0] = apply(fornberg_weights(x[0], x.subspan(0, 3), 1)[1], f, 0);
    d[n - 1] = apply(fornberg_weights(x[n - 1], x.subspan(n - 3, 3), 1)[1], f, n - 3);
    return d;
}

std::vector<double> second_derivative(std::span<const double> x, std::span<const double> f) {
    const std::size_t n = x.size();
    if (n < 4) throw std::invalid_argument("second_derivative needs at least 4 nodes");
    std::vector<double> d(n);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double hm = x[i] - x[i - 1];
        const double hp = x[i + 1] - x[i];
        d[i] = 2.0 * (hp * f[i - 1] - (hm + hp) * f[i] + hm * f[i + 1]) / (hm * hp * (hm + hp));
    }
    d[0] = apply(fornberg_weights(x[0], x.subspan(0, 4), 2)[2], f, 0);
    d[n - 1] = apply(fornberg_weights(x[n - 1], x.subspan(n - 4, 4), 2)[2], f, n - 4);
    return d;
}

std::pair<std::vector<double>, std::vector<double>> derivatives_5pt(std::span<const double> x,
                                                                    std::span<const double> f) {
    const std::size_t n = x.size();
    if (n < 5) throw std::invalid_argument("derivatives_5pt needs at least 5 nodes");
    std::vector<double> d1(n), d2(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t start = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(i) - 2, 0,
                                                             static_cast<std::ptrdiff_t>(n) - 5);
        const auto w = fornberg_weights(x[i], x.subspan(start, 5), 2);
        d1[i] = apply(w[1], f, start);
        d2[i] = apply(w[2], f, start);
    }
    return {std::move(d1), std::move(d2)};
}

std::size_t bracket(std::span<const double> nodes, double x) {
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
    std::ptrdiff_t i = (it - nodes.begin()) - 1;
    i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(nodes.size()) - 2);
    return static_cast<std::size_t>(i);
}

Pchip::Pchip(std::vector<double> x, std::vector<double> f) : x_(std::move(x)), f_(std::move(f)) {
    const std::size_t n = x_.size();
    if (n < 2 || f_.size() != n) throw std::invalid_argument("Pchip needs >= 2 matching samples");
    d_.assign(n, 0.0);
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x_[i + 1] - x_[i];
        delta[i] = (f_[i + 1] - f_[i]) / h[i];
    }
    if (n == 2) {
        d_[0] = d_[1] = delta[0];
        return;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0) {
            d_[i] = 0.0;
        } else {
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    auto end_slope = [](double h0, double h1, double d0, double d1) {
        double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (d * d0 <= 0.0) return 0.0;
        if (d0 * d1 <= 0.0 && std::abs(d) > std::abs(3.0 * d0)) return 3.0 * d0;
        return d;
    };
    d_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
}

double Pchip::operator()(double x) const {
    return hermite(x_, f_, d_, x);
}

double hermite(std::span<const double> x, std::span<const double> f, std::span<const double> df,
               double at) {
    const std::size_t i = bracket(x, at);
    const double h = x[i + 1] - x[i];
    const double t = (at - x[i]) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    const double h10 = t3 - 2.0 * t2 + t;
    const double h01 = -2.0 * t3 + 3.0 * t2;
    const double h11 = t3 - t2;
    return h00 * f[i] + h10 * h * df[i] + h01 * f[i + 1] + h11 * h * df[i + 1];
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
    std::vector<double> x(n), w(n);
    for (int i = 0; i < n; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0, p1 = z;
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return {std::move(x), std::move(w)};
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n < 2) throw std::invalid_argument("fit_line needs at least 2 points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit fit;
    fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    fit.intercept = my - fit.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (fit.intercept + fit.slope * x[i]);
        ss += r * r;
    }
    fit.rms_residual = std::sqrt(ss / static_cast<double>(n));
    return fit;
}

double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median of empty set");
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        const double lo = *std::max_element(v.begin(), v.begin() + mid);
        m = 0.5 * (m + lo);
    }
    return m;
}

}  // namespace kslab::num
