#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

// Small numerical building blocks shared by the modules: banded solves,
// finite-difference weights on nonuniform nodes, interpolation, fits.
namespace kslab::num {

// Tridiagonal system lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i].
// lower[0] and upper[n-1] are ignored. Returns false on a zero pivot or
// non-finite result; x is left unspecified in that case.
bool solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                       std::span<const double> upper, std::span<const double> rhs,
                       std::span<double> x);

// Fornberg weights for the derivatives 0..order at z from the given nodes.
// weights[k][j] multiplies f(nodes[j]) in the k-th derivative.
std::vector<std::vector<double>> fornberg_weights(double z, std::span<const double> nodes, int order);

// Second-order first derivative on a nonuniform grid: centered three-point
// stencil in the interior, one-sided three-point stencils at both ends.
std::vector<double> first_derivative(std::span<const double> x, std::span<const double> f);

// Second-order second derivative, same stencil layout as first_derivative.
std::vector<double> second_derivative(std::span<const double> x, std::span<const double> f);

// Five-point (fourth-order) first and second derivatives; near the ends the
// stencil is shifted inward. Requires at least 5 nodes.
std::pair<std::vector<double>, std::vector<double>> derivatives_5pt(std::span<const double> x,
                                                                    std::span<const double> f);

// Monotone piecewise-cubic (Fritsch-Carlson) interpolant on strictly increasing x.
class Pchip {
public:
    Pchip() = default;
    Pchip(std::vector<double> x, std::vector<double> f);

    double operator()(double x) const;
    double front() const { return x_.front(); }
    double back() const { return x_.back(); }

private:
    std::vector<double> x_;
    std::vector<double> f_;
    std::vector<double> d_;
};

// Cubic Hermite interpolation on strictly increasing x with given slopes.
double hermite(std::span<const double> x, std::span<const double> f, std::span<const double> df,
               double at);

// Gauss-Legendre nodes and weights on [-1, 1].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rms_residual = 0.0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y);

double median(std::vector<double> values);

// Index of the last node <= x (clamped to [0, n-2]) for increasing nodes.
std::size_t bracket(std::span<const double> nodes, double x);

}  // namespace kslab::num
