#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "kslab/radial.hpp"

// Backward self-similar profiles phi_m of
//   phi'' + ((N+1)/xi - xi/2) phi' - phi + phi (xi phi' + N phi) = 0,  xi^2 phi -> m,
// built through V(s) = xi^2 phi(xi), s = 1/xi, and continued downward in xi.
namespace kslab {

class TailCoefficient {
public:
    explicit TailCoefficient(double m) : m_(m) {
        if (!(m > 0.0) || !std::isfinite(m)) throw Error(ErrorCode::InvalidArgument, "m must be a positive real");
    }
    double value() const noexcept { return m_; }
    bool degenerate() const noexcept { return m_ == 2.0; }

private:
    double m_;
};

// F(V,s) = (N-2)(2Vs - V^2 s) / (1/2 + (5-N)s^2 - V s^2). Throws
// SingularDenominatorError when |den| <= 1e-12.
double F_rhs(double V, double s, Dimension dim);

// 1/2 + (5-N)s^2 - V s^2
double V_denominator(double V, double s, Dimension dim);

enum class VTermination { ReachedSmax, DenominatorSingular, Diverged, NonPositive, MonotoneTurn, StepFailed };

std::string to_string(VTermination t);

struct VSolution {
    double m = 0.0;
    int dim = 3;
    std::vector<double> s;   // increasing, s[0] = 0
    std::vector<double> V;
    std::vector<double> dV;  // dV/ds
    VTermination terminal_reason = VTermination::ReachedSmax;

    double s_terminal() const { return s.back(); }
    // Cubic Hermite interpolation of V (Taylor series below the first step).
    double value_at(double s_query) const;
};

struct VOptions {
    double cap = 1e6;              // |V| above this is Diverged
    double den_min = 1e-2;         // stop before the denominator degenerates
    double start_fraction = 1e-4;  // s_start = start_fraction * s_max
    double max_step_rel = 0.005;   // h <= max_step_rel * s
};

// Integrates the full second-order V-equation
//   s^3 V'' + V'(1/2 + (5-N)s^2 - V s^2) - (N-2) s V (2 - V) = 0
// from a Taylor start V = m + (N-2)m(2-m)s^2 + O(s^4) with Radau IIA.
VSolution solve_V_ivp(TailCoefficient m, Dimension dim, double s_max, double tol, const VOptions& opt = {});

// The first-order form V' = F(V,s), V(0) = m, integrated with Dormand-Prince.
VSolution solve_first_order_ivp(TailCoefficient m, Dimension dim, double s_max, double tol,
                                const VOptions& opt = {});

// Second Taylor coefficient of V at 0, (N-2)m(2-m).
double V_curvature_coefficient(double m, Dimension dim);

enum class Classification { Unbounded, TouchesZero, Regular, Indeterminate };

std::string to_string(Classification c);

struct SelfSimilarProfile {
    double m = 0.0;
    int dim = 3;
    double ell = 0.0;
    Classification classification = Classification::Indeterminate;
    std::vector<double> xi;    // decreasing toward ell
    std::vector<double> phi;
    std::vector<double> dphi;  // d phi / d xi
    // phi on [0, ell]: limit value at ell (infinity for Unbounded).
    double extension_value = std::numeric_limits<double>::quiet_NaN();
    double tail_a = 0.0;  // xi^2 phi ~ m + tail_a / xi^2 beyond xi.front()
    std::string diagnostics;

    double xi_max() const { return xi.front(); }
    double xi_min() const { return xi.back(); }
    double tail_error() const;
    // phi at any xi >= 0, using the extension below ell and the tail beyond xi_max.
    double value(double x) const;
};

// Large-xi part phi(xi) = s^2 V(s) at xi = 1/s for the sampled s > 0.
SelfSimilarProfile phi_from_V(const VSolution& v);

struct ContinuationCaps {
    double phi_cap = 1e8;
    double zero_tol = 1e-10;
    double xi_floor = 1e-6;
    double tol = 1e-10;
    double max_step_rel = 0.005;
};

// Integrates the phi-equation downward from the smallest sampled xi and
// classifies the left end. Appends samples to the profile.
SelfSimilarProfile continue_phi(SelfSimilarProfile partial, const ContinuationCaps& caps = {});

struct ProfileOptions {
    double s_max = 10.0;
    double tol = 1e-10;
    VOptions v;
    ContinuationCaps caps;
};

// solve_V_ivp + phi_from_V + continue_phi, repeated at tol/2; a classification
// that changes under the halving is reported as Indeterminate.
SelfSimilarProfile build_profile(TailCoefficient m, Dimension dim, const ProfileOptions& opt = {});

// max over interior samples of |residual| / max(1, largest term), five-point differences.
double residual_phi(const SelfSimilarProfile& p, Dimension dim);
double residual_phi(std::span<const double> xi, std::span<const double> phi, Dimension dim);

// max |F(xi) - F(xi_0) - int_{xi_0}^{xi} rho^{N+1} a phi (1 - N phi)| / max|F| with
// F = xi^{N+1} a phi' and a = exp(-xi^2/4 + int rho phi), a normalized at xi_0.
double weighted_flux_check(const SelfSimilarProfile& p, Dimension dim);
double weighted_flux_check(std::span<const double> xi, std::span<const double> phi, Dimension dim);

}  // namespace kslab
