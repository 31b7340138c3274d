#include <doctest.h>

#include <cmath>

#include "kslab/relaxation.hpp"

using namespace kslab;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Io;
}

}  // namespace

TEST_CASE("relaxation from a sub-solution rises monotonically to the IVP profile (m < 2)") {
    const RelaxationResult r = h_relaxation_oracle(TailCoefficient(1.0), Dimension(3), 0.05, 0.3, 50.0);
    CHECK(r.max_rel_diff <= 1e-6);
    CHECK(r.min_ht >= -1e-8);
    CHECK(r.min_hs >= -1e-8);
    CHECK(r.kappa > 0.0);
    CHECK(r.reference_residual < 1e-3);
}

TEST_CASE("relaxation from a super-solution decreases to the IVP profile (m > 2)") {
    const RelaxationResult r = h_relaxation_oracle(TailCoefficient(3.0), Dimension(3), 0.05, 0.3, 50.0);
    CHECK(r.max_rel_diff <= 1e-6);
    CHECK(r.max_ht <= 1e-8);
    CHECK(r.max_hs <= 1e-8);
}

TEST_CASE("relaxation in higher dimensions") {
    for (int n : {4, 5}) {
        const RelaxationResult r = h_relaxation_oracle(TailCoefficient(0.5), Dimension(n), 0.05, 0.3, 50.0);
        CHECK(r.max_rel_diff <= 1e-6);
        CHECK(r.min_ht >= -1e-8);
    }
}

TEST_CASE("first-order seeding converges to a nearby but distinct state") {
    RelaxationOptions opt;
    opt.seed = RelaxationSeed::FirstOrder;
    const RelaxationResult r = h_relaxation_oracle(TailCoefficient(1.0), Dimension(3), 0.05, 0.3, 50.0, opt);
    CHECK(r.max_rel_diff < 1e-2);
    CHECK(r.min_hs >= -1e-8);
}

TEST_CASE("steady operator vanishes on the IVP samples to discretization accuracy") {
    const VSolution v = solve_V_ivp(TailCoefficient(1.0), Dimension(3), 1.0, 1e-12);
    auto residual = [&](std::size_t n) {
        std::vector<double> s(n + 1), h(n + 1);
        for (std::size_t i = 0; i <= n; ++i) {
            s[i] = 0.05 + 0.25 * double(i) / double(n);
            h[i] = v.value_at(s[i]);
        }
        double worst = 0.0;
        for (double g : relaxation_operator(s, h, Dimension(3))) worst = std::max(worst, std::abs(g));
        return worst;
    };
    const double ratio = residual(200) / residual(400);
    CHECK(ratio == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("relaxation errors") {
    CHECK(code_of([] { h_relaxation_oracle(TailCoefficient(2.0), Dimension(3), 0.05, 0.3, 1.0); }) ==
          ErrorCode::DegenerateTail);
    CHECK(code_of([] { h_relaxation_oracle(TailCoefficient(1.0), Dimension(3), 0.3, 0.05, 1.0); }) ==
          ErrorCode::InvalidArgument);
    CHECK(code_of([] { h_relaxation_oracle(TailCoefficient(1.0), Dimension(3), 0.05, 5.0, 1.0); }) ==
          ErrorCode::InvalidArgument);
    CHECK(code_of([] { h_relaxation_oracle(TailCoefficient(1.0), Dimension(3), 0.05, 0.3, 1e-6); }) ==
          ErrorCode::NotConverged);
}
