#include <doctest.h>

#include <cmath>
#include <random>

#include "kslab/solver.hpp"

using namespace kslab;

namespace {

SolverConfig base_config(GridPtr g) {
    SolverConfig c;
    c.grid = std::move(g);
    return c;
}

RadialField constant_w(GridPtr g, double u0) { return RadialField(g, std::vector<double>(g->size(), u0 / 3.0), 0.0); }

RadialField gaussian_w(GridPtr g, double A, double sigma = 1.0) {
    return w_from_u(build_initial(InitialData{Gaussian{A, sigma}}, g), Dimension(3));
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Io;
}

}  // namespace

TEST_CASE("homogeneous data follows u' = u^2 and blows up at 1/u0") {
    auto g = make_grid(RadialGrid::uniform(1.0, 16));
    SolverConfig c = base_config(g);
    c.outer = OuterBoundary::Neumann;
    const BlowupRun r = run(c, constant_w(g, 10.0));
    CHECK(r.termination == Termination::BlowupDetected);
    const BlowupEstimate e = estimate_blowup_time(r.supnorm_history);
    CHECK(e.T_est == doctest::Approx(0.1).epsilon(1e-6));
    for (const Snapshot& s : r.snapshots) {
        const double exact = 10.0 / (1.0 - 10.0 * s.t) / 3.0;
        for (std::size_t i = 0; i < s.w.size(); ++i) CHECK(s.w[i] == doctest::Approx(exact).epsilon(1e-2));
        // stays spatially constant up to round-off amplified by the blow-up
        CHECK(s.w[0] == doctest::Approx(s.w[s.w.size() - 1]).epsilon(1e-6));
    }
}

TEST_CASE("the singular steady state drifts at second order on an annulus") {
    auto drift = [](std::size_t m) {
        auto g = make_grid(RadialGrid::annulus(0.5, 2.0, m));
        std::vector<double> w(g->size());
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = 2.0 / ((*g)[i] * (*g)[i]);
        SolverConfig c = base_config(g);
        c.inner = InnerBoundary::Dirichlet;
        c.outer = OuterBoundary::Dirichlet;
        c.inner_value = w.front();
        c.outer_value = w.back();
        c.time_cap = 0.05;
        c.steady_tol = 0.0;
        const BlowupRun r = run(c, RadialField(g, w, 0.0));
        CHECK(r.termination == Termination::TimeCap);
        double d = 0.0;
        const RadialField& f = r.snapshots.back().w;
        for (std::size_t i = 0; i < f.size(); ++i) d = std::max(d, std::abs(f[i] - w[i]));
        return d;
    };
    const double ratio = drift(32) / drift(64);
    CHECK(ratio == doctest::Approx(4.0).epsilon(0.2));
}

TEST_CASE("mass is conserved with the zero-density boundary") {
    auto g = make_grid(RadialGrid::log_graded(8.0, 300, 1e-3));
    SolverConfig c = base_config(g);
    c.time_cap = 0.2;
    const BlowupRun r = run(c, gaussian_w(g, 5.0));
    CHECK(r.mass_drift <= 1e-3);
    CHECK(r.initial_mass > 0.0);
    CHECK_FALSE(r.positivity_warning);
}

TEST_CASE("steps preserve nonnegativity on random monotone data (property)") {
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto g = make_grid(RadialGrid::log_graded(4.0, 120, 1e-3));
    SolverConfig c = base_config(g);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> v(g->size());
        double x = 50 * u(gen);
        for (auto& e : v) e = (x *= 0.9 + 0.1 * u(gen));
        const RadialField w = w_from_u(RadialField(g, v), Dimension(3));
        const double dt = 1e-3 / std::max(1.0, u_supnorm(w, Dimension(3)));
        StepStats st;
        const RadialField next = step(w, dt, c, &st);
        for (std::size_t i = 0; i < next.size(); ++i) CHECK(next[i] >= 0.0);
        CHECK(st.clamped == 0);
    }
}

TEST_CASE("termination modes") {
    auto g = make_grid(RadialGrid::uniform(2.0, 32));
    SolverConfig c = base_config(g);
    c.time_cap = 0.05;
    const BlowupRun steady = run(c, RadialField(g, std::vector<double>(g->size(), 0.0), 0.0));
    CHECK(steady.termination == Termination::SteadyState);
    const BlowupRun capped = run(c, gaussian_w(g, 1.0));
    CHECK(capped.termination == Termination::TimeCap);
    CHECK(capped.final_time() == doctest::Approx(0.05));
    c.max_steps = 5;
    const BlowupRun limited = run(c, gaussian_w(g, 1.0));
    CHECK(limited.steps == 5);
    CHECK(limited.message == "step limit reached");
}

TEST_CASE("snapshot schedule") {
    auto g = make_grid(RadialGrid::uniform(1.0, 16));
    SolverConfig c = base_config(g);
    c.outer = OuterBoundary::Neumann;
    c.schedule.times = {0.01, 0.05, 0.07};
    c.schedule.growth_factor = 0.0;
    c.snapshot_radii = {0.5};
    const BlowupRun r = run(c, constant_w(g, 10.0));
    std::vector<double> times;
    for (const auto& s : r.snapshots) times.push_back(s.t);
    REQUIRE(times.size() >= 4);
    CHECK(times[0] == 0.0);
    CHECK(times[1] == doctest::Approx(0.01));
    CHECK(times[2] == doctest::Approx(0.05));
    CHECK(times[3] == doctest::Approx(0.07));
    CHECK(r.probe_u.size() == r.snapshots.size());
    CHECK(r.probe_u[1][0] == doctest::Approx(10.0 / (1 - 0.1)).epsilon(1e-2));
}

TEST_CASE("growth-triggered snapshots are spaced by the growth factor") {
    auto g = make_grid(RadialGrid::uniform(1.0, 16));
    SolverConfig c = base_config(g);
    c.outer = OuterBoundary::Neumann;
    const BlowupRun r = run(c, constant_w(g, 10.0));
    for (std::size_t k = 2; k + 1 < r.snapshots.size(); ++k) {
        const double ratio = u_supnorm(r.snapshots[k].w, Dimension(3)) / u_supnorm(r.snapshots[k - 1].w, Dimension(3));
        CHECK(ratio == doctest::Approx(c.schedule.growth_factor).epsilon(0.02));
    }
}

TEST_CASE("regridding moves the run onto the finer grid") {
    auto g = make_grid(RadialGrid::log_graded(8.0, 200, 1e-3));
    SolverConfig c = base_config(g);
    c.regrid = RadialGrid::log_graded(8.0, 400, 1e-4);
    c.regrid_growth = 10.0;
    const BlowupRun r = run(c, gaussian_w(g, 20.0));
    CHECK(r.regridded);
    CHECK(r.snapshots.back().w.grid().size() == 401);
    CHECK(r.snapshots.front().w.grid().size() == 201);
    CHECK(code_of([&] { run_lockstep(c, gaussian_w(g, 1.0), gaussian_w(g, 2.0)); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("lockstep runs share snapshot times and keep ordered data ordered") {
    auto g = make_grid(RadialGrid::log_graded(6.0, 200, 1e-3));
    SolverConfig c = base_config(g);
    c.time_cap = 0.05;
    const auto [a, b] = run_lockstep(c, gaussian_w(g, 3.0), gaussian_w(g, 4.0, 1.1));
    REQUIRE(a.snapshots.size() == b.snapshots.size());
    for (std::size_t k = 0; k < a.snapshots.size(); ++k) CHECK(a.snapshots[k].t == b.snapshots[k].t);
    CHECK(comparison_check(a, b, 1e-8));
    CHECK_FALSE(comparison_check(b, a, 1e-8));
}

TEST_CASE("blow-up time estimate on synthetic histories (property)") {
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        const double T = 0.01 + u(gen), C = 0.1 + 5 * u(gen);
        std::vector<SupnormSample> h;
        for (int k = 0; k < 200; ++k) {
            const double t = T * (1.0 - std::pow(10.0, -6.0 * k / 199.0));
            h.push_back({t, C / (T - t)});
        }
        const BlowupEstimate e = estimate_blowup_time(h);
        CHECK(e.T_est == doctest::Approx(T).epsilon(1e-6));
        CHECK(e.rate_constant == doctest::Approx(-1.0 / C).epsilon(1e-6));
    }
}

TEST_CASE("blow-up time estimate errors") {
    std::vector<SupnormSample> few{{0, 1}, {1, 2}};
    CHECK(code_of([&] { estimate_blowup_time(few); }) == ErrorCode::NotEnoughData);
    std::vector<SupnormSample> flat;
    for (int k = 0; k < 20; ++k) flat.push_back({double(k), 1.0 + 0.1 * k});
    CHECK(code_of([&] { estimate_blowup_time(flat); }) == ErrorCode::EstimateUnreliable);
    std::vector<SupnormSample> bumpy;
    for (int k = 0; k < 20; ++k) bumpy.push_back({double(k), std::pow(2.0, k) * (k == 17 ? 0.45 : 1.0)});
    CHECK(code_of([&] { estimate_blowup_time(bumpy); }) == ErrorCode::EstimateUnreliable);
}

TEST_CASE("self-similar rescaling") {
    auto g = make_grid(RadialGrid::uniform(1.0, 16));
    const Snapshot s{0.5, RadialField(g, std::vector<double>(g->size(), 2.0), 0.5)};
    const SelfSimilarFrameField f = rescale_to_selfsimilar(s, 0.75);
    CHECK(f.tau == doctest::Approx(-std::log(0.25)));
    CHECK(f.xi.back() == doctest::Approx(2.0));
    CHECK(f.v[3] == doctest::Approx(0.5));
    CHECK(code_of([&] { rescale_to_selfsimilar(s, 0.5); }) == ErrorCode::InvalidFrame);
}

TEST_CASE("configuration and input errors") {
    auto g = make_grid(RadialGrid::uniform(1.0, 16));
    auto ann = make_grid(RadialGrid::annulus(0.5, 1.0, 16));
    SolverConfig c = base_config(g);
    c.dt_safety = 0.0;
    CHECK(code_of([&] { validate(c); }) == ErrorCode::InvalidArgument);
    c = base_config(ann);
    CHECK(code_of([&] { validate(c); }) == ErrorCode::InvalidArgument);
    c = base_config(g);
    c.inner = InnerBoundary::Dirichlet;
    CHECK(code_of([&] { validate(c); }) == ErrorCode::InvalidArgument);
    c = base_config(g);
    CHECK(code_of([&] { run(c, constant_w(make_grid(RadialGrid::uniform(1.0, 17)), 1.0)); }) ==
          ErrorCode::InvalidArgument);
    c.blowup_threshold = 1.0;
    CHECK(code_of([&] { run(c, constant_w(g, 10.0)); }) == ErrorCode::InvalidArgument);
    SolverConfig none;
    CHECK(code_of([&] { validate(none); }) == ErrorCode::InvalidArgument);
    BlowupRun a, b;
    CHECK(code_of([&] { comparison_check(a, b, 0.0); }) == ErrorCode::IncompatibleRuns);
}

TEST_CASE("advection mask only upwinds where the centered stencil loses its sign pattern") {
    auto g = make_grid(RadialGrid::uniform(1.0, 64));
    SolverConfig c = base_config(g);
    const RadialField calm = constant_w(g, 0.1);
    const StencilMask m1 = advection_mask(calm, 1e-4, c);
    CHECK(std::count(m1.begin(), m1.end(), 1) == 0);
    std::vector<double> steep(g->size());
    for (std::size_t i = 0; i < steep.size(); ++i) steep[i] = 1e4 * std::exp(-50 * (*g)[i]);
    const StencilMask m2 = advection_mask(RadialField(g, steep), 1e-8, c);
    CHECK(std::count(m2.begin(), m2.end(), 1) > 0);
    c.upwind = false;
    const StencilMask m3 = advection_mask(RadialField(g, steep), 1e-8, c);
    CHECK(std::count(m3.begin(), m3.end(), 1) == 0);
}
