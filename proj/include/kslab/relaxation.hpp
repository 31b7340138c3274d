#pragma once

#include <vector>

#include "kslab/profile.hpp"
#include "kslab/radial.hpp"

// Parabolic relaxation h_t = h_ss + s^{-3} L h on [eps, Lm] with
//   L h = (5-N) h_s s^2 + h_s / 2 - h_s h s^2 - 2(N-2) h s + (N-2) h^2 s,
// used as an independent route to the V-profile.
namespace kslab {

enum class RelaxationSeed {
    // Dirichlet data from the second-order IVP; start from V* -/+ kappa g with
    // J g = -1, an ordered sub- (m < 2) or super-solution (m > 2).
    IvpPerturbed,
    // Dirichlet and initial data from the first-order IVP V' = F(V,s).
    FirstOrder,
};

struct RelaxationOptions {
    std::size_t intervals = 4000;
    RelaxationSeed seed = RelaxationSeed::IvpPerturbed;
    double ivp_tol = 1e-12;
    double steady_tol = 1e-9;  // max |h_t| at which the march stops
    double dt_initial = 1e-7;
    double dt_growth = 1.5;
    double dt_max = 0.1;
};

struct RelaxationResult {
    RadialField h;                  // final state on the s-grid [eps, Lm]
    std::vector<double> reference;  // IVP solution on the same nodes
    double t_final = 0.0;
    std::size_t steps = 0;
    double min_ht = 0.0, max_ht = 0.0;  // discrete (h^{n+1} - h^n)/dt over all steps and nodes
    double min_hs = 0.0, max_hs = 0.0;  // over all recorded states, including the initial one
    double max_rel_diff = 0.0;          // final h against the reference
    double reference_residual = 0.0;    // max |G(reference)|, the steady residual of the IVP samples
    double kappa = 0.0;
};

// Discrete steady operator G(h)_i = D2 h + s^{-3}(D1 h * den - (N-2) s h (2 - h)) at interior nodes.
std::vector<double> relaxation_operator(std::span<const double> s, std::span<const double> h, Dimension dim);

// Errors: m == 2 -> DegenerateTail; no steady state by t_end -> NotConverged;
// Lm beyond the IVP range -> InvalidArgument.
RelaxationResult h_relaxation_oracle(TailCoefficient m, Dimension dim, double eps, double Lm, double t_end,
                                     const RelaxationOptions& opt = {});

}  // namespace kslab
