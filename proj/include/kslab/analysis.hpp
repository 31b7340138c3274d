#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kslab/solver.hpp"

// Final-time profiles W = lim w and U = lim u, the two alpha routes and the
// regularity and self-similar diagnostics.
namespace kslab {

struct WExtraction {
    RadialField W;
    std::vector<double> residual;  // rms residual of the linear fit in (T - t), per radius
    std::vector<double> relative_residual;
    std::size_t snapshots_used = 0;
    bool converged = true;  // every relative residual <= the threshold
};

// Fit w(r, t_k) = W(r) + c(r)(T - t_k) over the last `count` snapshots with t < T.
// Errors: fewer than 3 usable snapshots -> NotEnoughData.
WExtraction extract_W(const BlowupRun& run, double T, std::span<const double> radii, std::size_t count = 4,
                      double residual_threshold = 1e-2);

// Same fit applied to u = r w_r + N w, an independent route to U.
RadialField extrapolate_u(const BlowupRun& run, double T, std::span<const double> radii, std::size_t count = 4);

RadialField extract_U(const RadialField& W, Dimension dim);

struct Regularity {
    double c4 = 0.0;  // sup r^4 (-w_rr)_+
    double c3 = 0.0;  // sup r^3 (-u_r)_+
    std::vector<double> c4_per_snapshot;
    std::vector<double> c3_per_snapshot;
};

Regularity regularity_of(const RadialField& w, Dimension dim);
Regularity regularity_diagnostics(const BlowupRun& run, Dimension dim);

struct ProfileReport {
    std::vector<double> radii;
    std::vector<double> W_values;
    std::vector<double> U_values;
    double window_lo = 0.0, window_hi = 0.0;
    double alpha_from_U = 0.0;
    double alpha_from_W = 0.0;
    double plateau_ratio = 1.0;
    double mismatch = 0.0;
    bool converged = true;  // false when the two alpha routes differ by more than 15%
    Regularity regularity;
    std::optional<double> typeB_cauchy;
    std::vector<double> W_residual;
    double T = 0.0;
};

// Errors: r_hi / r_lo < 4, or a window outside the sampled radii -> InvalidWindow.
ProfileReport alpha_estimates(const RadialField& W, const RadialField& U, Dimension dim,
                              std::pair<double, double> window, std::size_t samples = 33);

// max over the last snapshot pairs and xi in [a, b] of the change of (T - t) u(sqrt(T - t) xi, t).
// Errors: fewer than 3 snapshots with t < T -> NotEnoughData.
double typeB_diagnostic(const BlowupRun& run, double T, std::pair<double, double> xi_window, std::size_t pairs = 2);

// Log-spaced radii on [lo, hi].
std::vector<double> log_radii(double lo, double hi, std::size_t count);

// One decade starting at 4 max(h_min, sqrt(T - t_first)), capped at 0.1 R (never narrower than a factor 4);
// t_first is the earliest snapshot used by extract_W.
std::pair<double, double> default_window(const BlowupRun& run, double T, std::size_t count = 4);

}  // namespace kslab
