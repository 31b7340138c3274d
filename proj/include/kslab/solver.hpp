#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kslab/radial.hpp"

// Time stepping for the mass-function equation
//   w_t = w_rr + (N+1)/r w_r + (N w + r w_r) w,   u = r w_r + N w.
namespace kslab {

enum class OuterBoundary { ZeroDensity, Neumann, Dirichlet };
enum class InnerBoundary { Symmetry, Dirichlet };
enum class Termination { BlowupDetected, TimeCap, SteadyState, StepFailed };

std::string to_string(OuterBoundary b);
std::string to_string(Termination t);

struct SnapshotSchedule {
    double growth_factor = std::pow(10.0, 0.125);  // snapshot when sup|u| grows by this factor; <= 1 disables
    std::vector<double> times;                      // exact snapshot times
};

struct SolverConfig {
    Dimension dim{3};
    GridPtr grid;
    double dt_safety = 1e-3;  // dt <= dt_safety / sup|u|
    double dt_max = 1e-3;
    double blowup_threshold = 1e8;
    double time_cap = 1.0;
    double steady_tol = 1e-10;  // max|w^{n+1} - w^n| / dt below this -> SteadyState; 0 disables
    std::vector<double> snapshot_radii;
    SnapshotSchedule schedule;
    OuterBoundary outer = OuterBoundary::ZeroDensity;
    InnerBoundary inner = InnerBoundary::Symmetry;
    double outer_value = 0.0;  // Dirichlet data
    double inner_value = 0.0;
    bool upwind = true;        // switch to upwinding where centered advection would break the M-matrix sign pattern
    std::optional<RadialGrid> regrid;  // one-shot interpolation onto this grid
    double regrid_growth = 1e3;
    double mass_window = 100.0;  // mass drift is tracked while sup|u| <= mass_window * initial
    std::size_t max_steps = 20'000'000;
    std::size_t history_stride = 50;  // sup-norm history keeps every k-th step (and every 0.1% change)
};

void validate(const SolverConfig& cfg);

struct StepStats {
    std::size_t clamped = 0;
    bool positivity_warning = false;
};

// Per-node advection stencil choice: true = upwind.
using StencilMask = std::vector<char>;

StencilMask advection_mask(const RadialField& w, double dt, const SolverConfig& cfg);

// One semi-implicit step: (I - dt A(w^n)) w^{n+1} = w^n with implicit diffusion,
// advection r w^n D_r w^{n+1} and reaction N w^n w^{n+1}. Throws StepFailed.
RadialField step(const RadialField& w, double dt, const SolverConfig& cfg, StepStats* stats = nullptr,
                 const StencilMask* mask = nullptr);

struct Snapshot {
    double t;
    RadialField w;
};

struct SupnormSample {
    double t;
    double supnorm;
};

struct BlowupRun {
    SolverConfig config;
    std::vector<Snapshot> snapshots;
    std::vector<SupnormSample> supnorm_history;
    Termination termination = Termination::TimeCap;
    std::size_t steps = 0;
    double initial_mass = 0.0;
    double mass_drift = 0.0;  // max relative drift while sup|u| <= mass_window * initial (zero-density boundary only)
    std::size_t clamped_total = 0;
    bool positivity_warning = false;
    bool regridded = false;
    std::vector<std::vector<double>> probe_u;  // u at snapshot_radii, one row per snapshot
    std::string message;

    double final_time() const { return snapshots.back().t; }
};

// Sup-norm of u = r w_r + N w on the grid.
double u_supnorm(const RadialField& w, Dimension dim);

// Mass sigma R^N w(R) read off the mass function at the outer node.
double mass_from_w(const RadialField& w, Dimension dim);

BlowupRun run(const SolverConfig& cfg, const RadialField& w0);

// Advances two runs with a common dt, shared snapshot times and a shared
// advection stencil, so snapshots can be compared node by node.
std::pair<BlowupRun, BlowupRun> run_lockstep(const SolverConfig& cfg, const RadialField& w0a,
                                             const RadialField& w0b);

struct BlowupEstimate {
    double T_est = 0.0;
    double fit_residual = 0.0;   // rms residual of 1/sup|u| about the fitted line
    double rate_constant = 0.0;  // slope of 1/sup|u| against t
    std::size_t samples_used = 0;
};

// Line through 1/sup|u| over the last decade of growth. Errors: fewer than
// 10 samples -> NotEnoughData; growth below 10x, a nonmonotone tail or a root
// before the last sample -> EstimateUnreliable.
BlowupEstimate estimate_blowup_time(std::span<const SupnormSample> history);

struct SelfSimilarFrameField {
    std::vector<double> xi;
    std::vector<double> v;
    double tau = 0.0;
};

SelfSimilarFrameField rescale_to_selfsimilar(const Snapshot& snap, double T);

// True iff wA <= wB + tol at every snapshot time the two runs share.
bool comparison_check(const BlowupRun& a, const BlowupRun& b, double tol);

}  // namespace kslab
